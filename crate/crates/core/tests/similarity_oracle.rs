use needdesk_core::sources::{similarity, similarity_as};
use needdesk_core::Exact;
use needdesk_testkit::oracle;
use proptest::prelude::*;

fn short() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop::sample::select(vec!['a', 'b', 'c', 'd']), 0..=12).prop_map(|v| v.into_iter().collect())
}

fn exact(a: &str, b: &str) -> Exact {
    let (n, d) = oracle::similarity_fraction(a, b);
    Exact::new(n as i128, d as i128)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_brute_force(a in short(), b in short()) {
        prop_assert_eq!(similarity_as::<Exact>(&a, &b), exact(&a, &b));
    }

    #[test]
    fn bounded_by_shorter_input(a in short(), b in short()) {
        let s = similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        if !a.is_empty() || !b.is_empty() {
            let bound = 2.0 * a.len().min(b.len()) as f64 / (a.len() + b.len()) as f64;
            prop_assert!(s <= bound + 1e-12);
        }
    }

    #[test]
    fn zero_iff_no_shared_character(a in short(), b in short()) {
        prop_assume!(!a.is_empty() || !b.is_empty());
        let shares = a.chars().any(|c| b.contains(c));
        prop_assert_eq!(similarity(&a, &b) == 0.0, !shares);
    }

    #[test]
    fn identity(a in short()) {
        prop_assert_eq!(similarity(&a, &a), 1.0);
    }
}

#[test]
fn normalization_is_applied_before_matching() {
    assert_eq!(similarity("  How   do I\tstart? ", "how do i start?"), 1.0);
    assert_eq!(similarity("abcd", "bcde"), 0.75);
}
