//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always print; exits non-zero on any failure.
//!
//! `cargo test -p needdesk-cli --test acceptance`

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::DateTime;
use needdesk_core::assignment::{assign, default_threshold, hierarchy_hit_rate, META_TEAM};
use needdesk_core::corpus::{Review, StoreKind};
use needdesk_core::detect::{detect_corpus, NeedKind};
use needdesk_core::metrics::{cohen_kappa, f_beta, fleiss_kappa, harmonic_f1, landis_koch, FBetaVariant, RatingsTable};
use needdesk_core::sources::{similarity, similarity_as};
use needdesk_core::workflow::reports::addressability_report;
use needdesk_core::workflow::{CaseResolution, TriageCase, WorkflowContext, WorkflowPolicy};
use needdesk_core::{defaults, jsonl, text, Exact};
use needdesk_testkit::tables::{ADDRESSABILITY, DETECTION_PRF, FILTER_FBETA, KAPPA_BANDS, TEAM_TABLE};
use needdesk_testkit::{oracle, workflow};
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn f_beta_reproduction() -> Outcome {
    for (name, p, r, printed) in FILTER_FBETA {
        let got = f_beta(*p, *r, 0.2, FBetaVariant::Linear).map_err(|e| e.to_string())?.value;
        ensure!((got - printed).abs() <= 0.0005, "{name}: {got:.4} vs {printed}");
    }
    Ok("fine 0.5126, coarse 0.4873".into())
}

fn per_class_f1() -> Outcome {
    let mut shown = Vec::new();
    for (class, p, r, printed) in DETECTION_PRF {
        let got = harmonic_f1(*p, *r).value;
        ensure!((got - printed).abs() <= 0.0007, "{class}: {got:.4} vs {printed}");
        ensure!((got - oracle::f1(*p, *r)).abs() <= 1e-12, "{class}: disagrees with oracle");
        shown.push(format!("{got:.4}"));
    }
    Ok(shown.join(" "))
}

fn team_table_round_trip() -> Outcome {
    let tax = defaults::taxonomy().map_err(|e| e.to_string())?;
    let teams = defaults::teams().map_err(|e| e.to_string())?;
    let table = defaults::derived_table(&teams, &tax).map_err(|e| e.to_string())?;
    for (cat, expected) in TEAM_TABLE {
        let row = table.row(cat).ok_or(format!("no row for {cat}"))?;
        let got: Vec<(String, u64)> = row.iter().map(|r| (r.team.clone(), r.percent())).collect();
        let want: Vec<(String, u64)> = expected.iter().map(|(t, p)| (t.to_string(), *p)).collect();
        ensure!(got == want, "{cat}: {got:?} vs {want:?}");
        if expected.is_empty() {
            let picks: Vec<String> = assign(cat, &table).map_err(|e| e.to_string())?.into_iter().map(|p| p.team).collect();
            ensure!(picks == [META_TEAM], "{cat} routed to {picks:?}");
        }
    }
    let privacy_meta = table
        .row("Privacy")
        .and_then(|row| row.iter().find(|r| r.team == META_TEAM))
        .ok_or("Privacy lost its Meta entry")?;
    ensure!(privacy_meta.share() == Ratio::new(1, 4), "Privacy/Meta share {}", privacy_meta.share());
    ensure!(privacy_meta.share() == default_threshold(), "threshold is not the Privacy/Meta share");
    Ok(format!("{} rows; Privacy/Meta exactly 1/4", TEAM_TABLE.len()))
}

fn random_word(rng: &mut StdRng) -> String {
    let len = rng.gen_range(0..=12);
    (0..len).map(|_| *['a', 'b', 'c', 'd'].choose(rng).unwrap()).collect()
}

fn similarity_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    for i in 0..1000 {
        let (a, b) = (random_word(&mut rng), random_word(&mut rng));
        let (n, d) = oracle::similarity_fraction(&a, &b);
        let want = Exact::new(n as i128, d as i128);
        let got = similarity_as::<Exact>(&a, &b);
        ensure!(got == want, "pair {i} ({a:?}, {b:?}): {got} vs {want}");
    }
    ensure!(similarity("abcd", "bcde") == 0.75, "abcd/bcde = {}", similarity("abcd", "bcde"));
    Ok("1000 pairs exact; abcd/bcde = 0.75".into())
}

fn kappa_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    for i in 0..200 {
        let k = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=30);
        let pairs: Vec<(usize, usize)> = (0..n).map(|_| (rng.gen_range(0..k), rng.gen_range(0..k))).collect();
        let got = cohen_kappa::<f64, _>(&pairs).map_err(|e| e.to_string())?.value;
        ensure!((got - oracle::cohen(&pairs, k)).abs() <= 1e-12, "cohen table {i}");

        let raters = rng.gen_range(2..=5u64);
        let cats = rng.gen_range(2..=4);
        let votes: Vec<Vec<u64>> = (0..rng.gen_range(1..=12))
            .map(|_| {
                let mut row = vec![0u64; cats];
                for _ in 0..raters {
                    row[rng.gen_range(0..cats)] += 1;
                }
                row
            })
            .collect();
        let table = RatingsTable {
            items: (0..votes.len()).map(|i| i.to_string()).collect(),
            categories: (0..cats).map(|j| format!("c{j}")).collect(),
            votes: votes.clone(),
        };
        let got = fleiss_kappa::<f64>(&table).map_err(|e| e.to_string())?.value;
        ensure!((got - oracle::fleiss(&votes)).abs() <= 1e-12, "fleiss table {i}");
    }
    let hand: [(&[(u8, u8)], Exact); 3] = [
        (&[(0, 0), (0, 1), (1, 0), (1, 1)], Exact::new(0, 1)),
        (&[(0, 0), (1, 1), (0, 0), (0, 1)], Exact::new(1, 2)),
        (&[(0, 0), (0, 0), (0, 1), (1, 0)], Exact::new(-1, 3)),
    ];
    for (pairs, want) in hand {
        let got = cohen_kappa::<Exact, _>(pairs).map_err(|e| e.to_string())?.value;
        ensure!(got == want, "hand case {pairs:?}: {got} vs {want}");
    }
    for (kappa, band) in KAPPA_BANDS {
        let got = landis_koch(kappa).map_err(|e| e.to_string())?.to_string();
        ensure!(got == *band, "{kappa} -> {got}, expected {band}");
    }
    Ok("200 random tables; 0, 1/2, -1/3 exact; bands match".into())
}

fn hit_rates() -> Outcome {
    let r = |teams: &[&'static str], truth: &'static str| (teams.to_vec(), truth);
    let cases = [
        r(&["Mobile", "Support"], "Mobile"),
        r(&["Support", "Mobile"], "Support"),
        r(&["Routing", "Support"], "Routing"),
        r(&["UI/UX", "Mobile"], "UI/UX"),
        r(&["Mobile"], "Mobile"),
        r(&["Support", "Mobile"], "Support"),
        r(&["Mobile", "Support"], "Support"),
        r(&["Routing", "Mobile"], "Mobile"),
        r(&["Mobile", "Support"], "Business"),
        r(&["Meta"], "Routing"),
    ];
    let report = hierarchy_hit_rate::<Exact, _>(&cases).map_err(|e| e.to_string())?;
    ensure!(report.overall == Exact::new(4, 5), "overall {}", report.overall);
    ensure!(report.per_rank[0] == Exact::new(3, 5), "rank 1 {}", report.per_rank[0]);
    ensure!(report.per_rank[1] == Exact::new(1, 5), "rank 2 {}", report.per_rank[1]);

    let (resolved, total, shown) = ADDRESSABILITY;
    let cases: Vec<TriageCase> = (0..total as usize)
        .map(|i| {
            let mut c = TriageCase::new(workflow::seed(i));
            c.confirmed_label = Some(NeedKind::Explicit);
            c.resolution = Some(if (i as u64) < resolved {
                CaseResolution::Answered
            } else {
                CaseResolution::Unresolvable
            });
            c
        })
        .collect();
    let report = addressability_report::<f64>(&cases);
    let want = format!("{resolved} ({shown})");
    ensure!(report.display == want, "displayed {:?}, expected {want:?}", report.display);
    Ok(format!("0.8/0.6/0.2; {want}"))
}

fn detection_recall() -> Outcome {
    let lexicon = defaults::lexicon().map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(3);
    let filler = ["the", "map", "today", "works", "fine", "karte", "heute", "new", "update"];
    let created_at = DateTime::from_timestamp(1_700_000_000, 0).unwrap();
    let reviews: Vec<Review> = (0..1000)
        .map(|i| {
            let entry = lexicon.entries().choose(&mut rng).unwrap();
            let mut pattern = entry.pattern.clone();
            if rng.gen_bool(0.5) {
                pattern = pattern.to_uppercase();
            }
            let before: Vec<&str> = (0..rng.gen_range(0..4)).map(|_| *filler.choose(&mut rng).unwrap()).collect();
            let after: Vec<&str> = (0..rng.gen_range(0..4)).map(|_| *filler.choose(&mut rng).unwrap()).collect();
            let language = if entry.language == "*" { "en" } else { entry.language.as_str() };
            Review {
                id: format!("s{i}"),
                store: StoreKind::GooglePlay,
                app_id: "com.example.seeded".into(),
                title: None,
                body: format!("{} {pattern} {}.", before.join(" "), after.join(" ")),
                rating: 3,
                language: language.into(),
                created_at,
                developer_responses: Vec::new(),
            }
        })
        .collect();
    let started = Instant::now();
    let (labels, _) = detect_corpus(&reviews, &lexicon);
    let elapsed = started.elapsed();
    let flagged = labels.iter().filter(|l| l.kind != NeedKind::None).count();
    ensure!(flagged == reviews.len(), "recall {flagged}/{}", reviews.len());
    for (label, review) in labels.iter().zip(&reviews) {
        let unit_text = label.unit.text(review);
        for hit in &label.hits {
            let sliced = hit.span.slice(&unit_text).ok_or(format!("{}: span out of range", review.id))?;
            ensure!(sliced == hit.matched_text, "{}: span slices to {sliced:?}", review.id);
            let canonical = text::canonical_pattern(sliced);
            ensure!(canonical.as_deref() == Some(hit.entry.pattern.as_str()), "{}: {sliced:?} is not {:?}", review.id, hit.entry.pattern);
        }
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    jsonl::write(&mut first, &labels).map_err(|e| e.to_string())?;
    jsonl::write(&mut second, &detect_corpus(&reviews, &lexicon).0).map_err(|e| e.to_string())?;
    ensure!(first == second, "rerun differs");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("recall 1.0 on 1000 reviews in {} ms", elapsed.as_millis()))
}

fn workflow_soundness() -> Outcome {
    let tax = defaults::taxonomy().map_err(|e| e.to_string())?;
    let teams = defaults::teams().map_err(|e| e.to_string())?;
    let ctx = WorkflowContext {
        taxonomy: &tax,
        teams: &teams,
        policy: WorkflowPolicy::default(),
    };
    let pairs = workflow::check_transition_table(&ctx, 7)?;
    let terminal = workflow::check_random_replays(&tax, &teams, 500, 2024)?;
    let closed = workflow::check_fuzzed_soundness(&tax, &teams, 2000, 99)?;
    ensure!(closed > 0, "no fuzzed run closed a case");
    Ok(format!("{pairs} pairs; 500 replays ({terminal} terminal); 2000 fuzzed runs ({closed} closed)"))
}

fn golden_run() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    common::pipeline(dir.path());
    let elapsed = started.elapsed();
    let problems = common::compare_with_golden(dir.path());
    ensure!(problems.is_empty(), "{}", problems.join("; "));
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    let files = common::snapshot(dir.path()).len();
    Ok(format!("{files} files identical in {} ms", elapsed.as_millis()))
}

fn main() -> ExitCode {
    let criteria: &[Criterion] = &[
        ("F-beta reproduction", f_beta_reproduction),
        ("per-class F1 reproduction", per_class_f1),
        ("team table round-trip", team_table_round_trip),
        ("similarity oracle equivalence", similarity_oracle),
        ("kappa oracle equivalence", kappa_oracle),
        ("hierarchy hit-rate arithmetic", hit_rates),
        ("detection recall property", detection_recall),
        ("workflow soundness", workflow_soundness),
        ("end-to-end golden run", golden_run),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
