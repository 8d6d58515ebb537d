use needdesk_core::metrics::{cohen_kappa, fleiss_kappa, RatingsTable};
use needdesk_testkit::oracle;
use proptest::prelude::*;

fn pairs() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=4).prop_flat_map(|k| (Just(k), proptest::collection::vec((0..k, 0..k), 1..=30)))
}

fn table() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (2u64..=5, 2usize..=4, 1usize..=12).prop_flat_map(|(raters, cats, items)| {
        proptest::collection::vec(proptest::collection::vec(0..cats, raters as usize), items).prop_map(move |rows| {
            rows.into_iter()
                .map(|labels| {
                    let mut counts = vec![0u64; cats];
                    for l in labels {
                        counts[l] += 1;
                    }
                    counts
                })
                .collect()
        })
    })
}

fn ratings(votes: &[Vec<u64>]) -> RatingsTable {
    RatingsTable {
        items: (0..votes.len()).map(|i| i.to_string()).collect(),
        categories: (0..votes[0].len()).map(|j| format!("c{j}")).collect(),
        votes: votes.to_vec(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cohen_matches_definition((k, p) in pairs()) {
        let got = cohen_kappa::<f64, _>(&p).unwrap().value;
        prop_assert!((got - oracle::cohen(&p, k)).abs() <= 1e-12, "{got} vs {}", oracle::cohen(&p, k));
    }

    #[test]
    fn fleiss_matches_definition(v in table()) {
        let got = fleiss_kappa::<f64>(&ratings(&v)).unwrap().value;
        prop_assert!((got - oracle::fleiss(&v)).abs() <= 1e-12, "{got} vs {}", oracle::fleiss(&v));
    }

    #[test]
    fn cohen_ignores_item_order((_k, mut p) in pairs(), seed in any::<u64>()) {
        let before = cohen_kappa::<f64, _>(&p).unwrap().value;
        let n = p.len();
        for i in (1..n).rev() {
            p.swap(i, (seed as usize).wrapping_mul(i + 7) % (i + 1));
        }
        prop_assert!((cohen_kappa::<f64, _>(&p).unwrap().value - before).abs() <= 1e-12);
    }

    #[test]
    fn fleiss_ignores_item_and_category_order(v in table()) {
        let before = fleiss_kappa::<f64>(&ratings(&v)).unwrap().value;
        let mut rev: Vec<Vec<u64>> = v.iter().rev().map(|r| r.iter().rev().copied().collect()).collect();
        prop_assert!((fleiss_kappa::<f64>(&ratings(&rev)).unwrap().value - before).abs() <= 1e-12);
        rev.rotate_left(1);
        prop_assert!((fleiss_kappa::<f64>(&ratings(&rev)).unwrap().value - before).abs() <= 1e-12);
    }
}
