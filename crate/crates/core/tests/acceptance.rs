//! Acceptance suite. Every criterion prints one PASS/FAIL line; run with
//! `cargo test --release -p treeseq-core --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use treeseq_core::asymptotics::{heuristic_threshold, sup_ratio};
use treeseq_core::certifier::certificate::replay;
use treeseq_core::certifier::{certify_head, default_range, Certificate, Kappa, ReplayMode, DEFAULT_MARGIN};
use treeseq_core::checks::{check_all, Property};
use treeseq_core::counts::*;
use treeseq_core::seq::{
    decreasing_suffix_start, increasing_prefix_end, is_ordered_log_concave, is_ultra_log_concave, is_unimodal,
};
use treeseq_core::tree::{enumerate_free_trees, random_tree_indexed, tree_from_levels, tree_stats};
use treeseq_core::{CountSequence, Regime};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, started: Instant, detail: String) -> Outcome {
    let took = started.elapsed();
    ensure(took <= limit, format!("{detail}; {took:.1?} (limit {limit:?})"))
}

fn exhaustive_unimodal_olc() -> Outcome {
    let started = Instant::now();
    let mut at_20 = 0u64;
    let mut total = 0u64;
    let mut bad = Vec::new();
    for n in 1..=20 {
        let mut it = enumerate_free_trees(n).map_err(|e| e.to_string())?;
        while let Some(lv) = it.next_levels() {
            let tree = tree_from_levels(&lv);
            let v = check_all(&[Property::Unimodal, Property::Olc], &tree, &tree_stats(&tree));
            if !v.is_empty() && bad.len() < 5 {
                bad.push(format!("n={n} {}", tree.to_text()));
            }
            total += 1;
            if n == 20 {
                at_20 += 1;
            }
        }
    }
    ensure(
        bad.is_empty() && at_20 == 823_065,
        format!("{total} trees, {at_20} at n=20, counterexamples {bad:?}, {:.1?}", started.elapsed()),
    )
}

fn star_fails_ulc() -> Outcome {
    let s = CountSequence::from_u64s(&[1, 4, 3, 1]).unwrap();
    ensure(!is_ultra_log_concave(&s), format!("(1,4,3,1) ultra log-concave: {}", is_ultra_log_concave(&s)))
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut compared = 0;
    for n in 3..=8usize {
        let census = brute_force_census(n).map_err(|e| e.to_string())?;
        for k in 1..n {
            let brute = profile_from_census(&census, k).map_err(|e| e.to_string())?;
            for t in 0..=(n - k) as u64 {
                let formula = e_nkt(n as u64, k as u64, t).map_err(|e| e.to_string())?;
                let got = brute.probs.get(t as usize).cloned().unwrap_or_else(BigRational::zero);
                if got != formula {
                    return Err(format!("e({n},{k},{t}): census {got} formula {formula}"));
                }
                compared += 1;
            }
        }
    }
    within(Duration::from_secs(120), started, format!("{compared} (n,k,t) exact matches"))
}

fn avoiding_counts() -> Outcome {
    let mut compared = 0;
    for n in 3..=8usize {
        let census = brute_force_census(n).map_err(|e| e.to_string())?;
        for k in 1..=n {
            for l in 0..=n - k {
                let formula =
                    trees_with_independent_set_avoiding(n as u64, k as u64, l as u64).map_err(|e| e.to_string())?;
                if formula != BigUint::from(census.avoiding[k][l]) {
                    return Err(format!("n={n} k={k} l={l}: {formula} vs {}", census.avoiding[k][l]));
                }
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} (n,k,l) exact matches"))
}

fn stirling_alternating() -> Outcome {
    let mut compared = 0;
    for n in 2..=25u64 {
        for k in 1..n {
            for t in 0..n - k {
                let (a, b) = (f_nkt_stirling(n, k, t), f_nkt_alternating(n, k, t));
                if a.as_ref().ok() != b.as_ref().ok() || a.is_err() {
                    return Err(format!("({n},{k},{t}): {a:?} vs {b:?}"));
                }
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} (n,k,t) exact matches"))
}

fn marginalization() -> Outcome {
    let mut compared = 0;
    for n in 2..=25u64 {
        for k in 1..n {
            let sum = (0..=n - k).try_fold(BigRational::zero(), |acc, t| e_nkt(n, k, t).map(|e| acc + e));
            let sum = sum.map_err(|e| e.to_string())?;
            let expected = num_traits::pow(BigRational::new((n - k).into(), n.into()), k as usize - 1);
            if sum != expected {
                return Err(format!("n={n} k={k}: {sum} vs {expected}"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} (n,k) exact matches"))
}

fn theorem_suite() -> Outcome {
    let props = [
        Property::Thm2,
        Property::Thm4,
        Property::Thm5,
        Property::Wingard,
        Property::FisherRyan,
        Property::Zykov,
        Property::CountingEdges,
        Property::Konig,
    ];
    let mut trees = 0;
    for n in 1..=14 {
        let mut it = enumerate_free_trees(n).map_err(|e| e.to_string())?;
        while let Some(lv) = it.next_levels() {
            let tree = tree_from_levels(&lv);
            let v = check_all(&props, &tree, &tree_stats(&tree));
            if let Some(first) = v.first() {
                return Err(format!("{}: {first:?}", tree.to_text()));
            }
            trees += 1;
        }
    }
    Ok(format!("{trees} trees x {} properties, zero violations", props.len()))
}

fn heuristic_brackets() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (regime, inside, outside) in [(Regime::Head, 0.28098, 0.28099), (Regime::Tail, 0.34667, 0.34666)] {
        let b = heuristic_threshold(regime, 1e-5).map_err(|e| e.to_string())?;
        let holds = |k: f64| sup_ratio(regime, k).map(|r| r.ratio < 1.0).unwrap_or(false);
        let this =
            (b.pass - inside).abs() < 1e-9 && (b.fail - outside).abs() < 1e-9 && holds(inside) && !holds(outside);
        ok &= this;
        lines.push(format!("{regime} pass {:.5} fail {:.5}", b.pass, b.fail));
    }
    ensure(ok, lines.join(", "))
}

fn desk_certification() -> Outcome {
    let started = Instant::now();
    let (lo, hi) = default_range(Regime::Head, 100);
    let small = certify_head(100, lo, hi, DEFAULT_MARGIN).map_err(|e| e.to_string())?.verified;
    // the finer grid starts where the coarse one left off
    let start = small.map_or(lo, |(_, top)| top * 10);
    let (_, hi) = default_range(Regime::Head, 1000);
    let large = certify_head(1000, start, hi, DEFAULT_MARGIN).map_err(|e| e.to_string())?.verified;
    let ok = small == Some((10, 23)) && large == Some((230, 274));
    match within(Duration::from_secs(300), started, format!("M=100 {small:?}, M=1000 {large:?}")) {
        Ok(d) if ok => Ok(d),
        Ok(d) | Err(d) => Err(d),
    }
}

fn persisted_certificates() -> Outcome {
    let started = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (text, regime, expected) in [
        (include_str!("../fixtures/cert_head.json"), Regime::Head, Kappa { num: 112_384, den: 400_000 }),
        (include_str!("../fixtures/cert_tail.json"), Regime::Tail, Kappa { num: 138_672, den: 400_000 }),
    ] {
        let cert = Certificate::from_json(text).map_err(|e| e.to_string())?;
        let report = replay(&cert, ReplayMode::BitExact).map_err(|e| format!("{regime}: {e}"))?;
        let last = cert.stages.last().map(|s| s.m);
        let this = report.regime == regime && report.kappa == expected && last == Some(400_000);
        ok &= this;
        lines.push(format!(
            "{regime} kappa {}/{} = {} ({} rows bit-exact)",
            report.kappa.num,
            report.kappa.den,
            report.kappa.value(),
            report.bit_exact
        ));
    }
    match within(Duration::from_secs(60), started, lines.join(", ")) {
        Ok(d) if ok => Ok(d),
        Ok(d) | Err(d) => Err(d),
    }
}

fn random_tree_statistics() -> Outcome {
    let n = 1000usize;
    let (head, tail) = (27 * n / 100, (39 * n).div_ceil(100));
    let mut sum = 0.0;
    let mut failures = Vec::new();
    for i in 0..200 {
        let st = tree_stats(&random_tree_indexed(n, 1, i));
        sum += st.alpha as f64 / n as f64;
        let (inc, dec) = (increasing_prefix_end(&st.iseq), decreasing_suffix_start(&st.iseq));
        if inc < head || dec > tail || !is_unimodal(&st.iseq) || !is_ordered_log_concave(&st.iseq) {
            failures.push((i, inc, dec));
        }
    }
    let mean = sum / 200.0;
    ensure(
        (mean - 0.5671).abs() <= 0.02 && failures.is_empty(),
        format!("mean alpha/n {mean:.4}, increasing to {head} and decreasing from {tail}: failures {failures:?}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("exhaustive unimodal + OLC, n <= 20", exhaustive_unimodal_olc),
        ("4-star fails ultra log-concavity", star_fails_ulc),
        ("e_nkt equals census profile, n = 3..8", oracle_equivalence),
        ("avoiding-set count equals census, n = 3..8", avoiding_counts),
        ("Stirling form equals alternating form, n <= 25", stirling_alternating),
        ("marginalization identity, n <= 25", marginalization),
        ("theorem suite on all trees, n <= 14", theorem_suite),
        ("heuristic threshold brackets at 1e-5", heuristic_brackets),
        ("certify_head at M = 100 and M = 1000", desk_certification),
        ("persisted certificates replay", persisted_certificates),
        ("random tree statistics, n = 1000", random_tree_statistics),
    ];
    let mut report = Vec::new();
    let mut failed = 0;
    for (name, run) in criteria {
        let line = match run() {
            Ok(detail) => format!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                format!("FAIL  {name}: {detail}")
            }
        };
        println!("{line}");
        report.push(line);
    }
    assert_eq!(failed, 0, "\n{}", report.join("\n"));
}
