use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use treeseq_core::counts::*;
use treeseq_core::seq::binomial;

const FIXTURE: &str = include_str!("../fixtures/oracle_n3_8.jsonl");

fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn labelled_trees(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n).pow(n as u32 - 2))
}

#[test]
fn closed_forms_match_fresh_census() {
    for n in 3..=7usize {
        let census = brute_force_census(n).unwrap();
        assert_eq!(census.trees, (n as u64).pow(n as u32 - 2));
        for k in 1..n {
            let brute = profile_from_census(&census, k).unwrap();
            let formula = ExtensionProfile::from_formula(n as u64, k as u64).unwrap();
            assert_eq!(brute, formula, "n={n} k={k}");
            // E(X_k) = C(n,k) P(K independent), by symmetry over k-sets
            let p_indep = BigRational::from_integer(BigInt::from(census.avoiding[k][0])) / labelled_trees(n);
            let expected = BigRational::from_integer(BigInt::from(binomial(n as u64, k as u64))) * &p_indep;
            assert_eq!(expected_ik(n as u64, k as u64).unwrap(), expected, "n={n} k={k}");
            assert_eq!(prob_independent(n as u64, k as u64).unwrap(), p_indep);
        }
        for k in 1..=n {
            for l in 0..=n - k {
                let c = trees_with_independent_set_avoiding(n as u64, k as u64, l as u64).unwrap();
                assert_eq!(c, BigUint::from(census.avoiding[k][l]), "n={n} k={k} l={l}");
            }
        }
    }
}

#[test]
fn persisted_fixture_matches_closed_forms() {
    let mut fixture = BTreeMap::new();
    for line in FIXTURE.lines() {
        let r: OracleRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.format, ORACLE_FORMAT);
        fixture.insert((r.n, r.kind.clone(), r.k, r.t, r.l), r.value().unwrap());
    }
    let mut compared = 0;
    for n in 3..=8 {
        for r in formula_records(n).unwrap() {
            assert_eq!(fixture.get(&(r.n, r.kind.clone(), r.k, r.t, r.l)), Some(&r.value().unwrap()), "{r:?}");
            compared += 1;
        }
    }
    assert_eq!(compared, fixture.len());
}

#[test]
fn census_by_prefix_merges_to_full() {
    let n = 6;
    let full = brute_force_census(n).unwrap();
    let mut parts = census_for_prefix(n, &[1, 1]).unwrap();
    for a in 1..=n as u32 {
        for b in 1..=n as u32 {
            if (a, b) != (1, 1) {
                parts.merge(&census_for_prefix(n, &[a, b]).unwrap());
            }
        }
    }
    assert_eq!(parts, full);
    assert!(census_for_prefix(n, &[7]).is_err());
    assert!(brute_force_census(MAX_CENSUS_N + 1).is_err());
}

#[test]
fn stirling_and_alternating_agree() {
    for n in 2..=16u64 {
        for k in 1..n {
            for t in 0..n - k {
                assert_eq!(f_nkt_stirling(n, k, t).unwrap(), f_nkt_alternating(n, k, t).unwrap(), "({n},{k},{t})");
            }
            assert!(f_nkt_stirling(n, k, n - k).is_err());
        }
    }
}

#[test]
fn profiles_are_distributions() {
    for n in 2..=16u64 {
        for k in 1..n {
            let p = ExtensionProfile::from_formula(n, k).unwrap();
            assert!(p.probs.iter().all(is_probability), "n={n} k={k}");
            assert_eq!(p.total(), prob_independent(n, k).unwrap());
            let f_sum = (0..=n - k).fold(BigRational::zero(), |acc, t| acc + f_nkt_alternating(n, k, t).unwrap());
            assert_eq!(f_sum, expected_ik(n, k).unwrap());
        }
    }
}

#[test]
fn g1_and_g2_split_the_expectation() {
    for n in 3..=16u64 {
        for k in 1..=n - 2 {
            let shared = if 2 * k < n { f_nkt_alternating(n, k, k + 1).unwrap() } else { BigRational::zero() };
            assert_eq!(g1(n, k).unwrap() + g2(n, k).unwrap() - shared, expected_ik(n, k).unwrap(), "n={n} k={k}");
        }
    }
    assert_eq!(g2(4, 1).unwrap(), rational(9, 4));
}

#[test]
fn expectation_edge_cases() {
    assert_eq!(expected_ik(1, 1).unwrap(), BigRational::one());
    assert_eq!(expected_ik(5, 5).unwrap(), BigRational::zero());
    assert_eq!(expected_ik(5, 0).unwrap(), BigRational::one());
    // every tree on n vertices has n independent singletons
    assert_eq!(expected_ik(9, 1).unwrap(), rational(9, 1));
    // n-1 edges among C(n,2) pairs
    assert_eq!(expected_ik(6, 2).unwrap(), rational(15 - 5, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginalisation(n in 2u64..40, k in 1u64..39) {
        prop_assume!(k < n);
        let p = ExtensionProfile::from_formula(n, k).unwrap();
        let expected = num_traits::pow(rational(n - k, n), k as usize - 1);
        prop_assert_eq!(p.total(), expected);
    }

    #[test]
    fn census_records_roundtrip_json(n in 3usize..6) {
        for r in census_records(&brute_force_census(n).unwrap()) {
            let back: OracleRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
