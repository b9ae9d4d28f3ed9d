//! Named per-tree properties: the sequence predicates plus the structural
//! theorems about trees, each reporting the first index where it breaks.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seq::{self, binomial, CountSequence};
use crate::tree::{Tree, TreeStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Unimodal,
    Lc,
    Olc,
    Ulc,
    Realroots,
    /// Weakly decreasing from `ceil(alpha (n-1) / (alpha + n))`.
    Thm2,
    /// Weakly increasing up to `ceil(min_maximal_is / 2)`.
    Thm4,
    /// `min_maximal_is >= ceil((n - alpha + 1) / 2)` and weakly increasing up
    /// to `ceil((n - alpha + 1) / 4)`.
    Thm5,
    FisherRyan,
    Zykov,
    Wingard,
    CountingEdges,
    Konig,
}

pub const ALL_PROPERTIES: [Property; 13] = [
    Property::Unimodal,
    Property::Lc,
    Property::Olc,
    Property::Ulc,
    Property::Realroots,
    Property::Thm2,
    Property::Thm4,
    Property::Thm5,
    Property::FisherRyan,
    Property::Zykov,
    Property::Wingard,
    Property::CountingEdges,
    Property::Konig,
];

/// Largest tree the subset-enumerating check accepts.
pub const MAX_COUNTING_EDGES_N: usize = 32;

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::Unimodal => "unimodal",
            Property::Lc => "lc",
            Property::Olc => "olc",
            Property::Ulc => "ulc",
            Property::Realroots => "realroots",
            Property::Thm2 => "thm2",
            Property::Thm4 => "thm4",
            Property::Thm5 => "thm5",
            Property::FisherRyan => "fisher-ryan",
            Property::Zykov => "zykov",
            Property::Wingard => "wingard",
            Property::CountingEdges => "counting-edges",
            Property::Konig => "konig",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown property {0:?}")]
pub struct UnknownProperty(pub String);

impl FromStr for Property {
    type Err = UnknownProperty;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_PROPERTIES.iter().copied().find(|p| p.name() == s).ok_or_else(|| UnknownProperty(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub property: Property,
    pub index: Option<usize>,
    pub detail: String,
}

fn violation(property: Property, index: Option<usize>, detail: impl Into<String>) -> Option<Violation> {
    Some(Violation { property, index, detail: detail.into() })
}

/// Checks one property. `stats` must belong to `tree`; its sequence is
/// already trimmed.
pub fn check(property: Property, tree: &Tree, stats: &TreeStats) -> Option<Violation> {
    let s = &stats.iseq;
    let n = tree.n();
    let alpha = stats.alpha;
    let at = |k: Option<usize>, what: &str| k.and_then(|k| violation(property, Some(k), what));
    match property {
        Property::Unimodal => at(seq::unimodal_violation(s), "ascent after a descent"),
        Property::Lc => at(seq::log_concave_violation(s), "a_k^2 < a_{k-1} a_{k+1}"),
        Property::Olc => at(seq::ordered_log_concave_violation(s), "k a_k^2 < (k+1) a_{k-1} a_{k+1}"),
        Property::Ulc => at(seq::ultra_log_concave_violation(s), "ultra log-concavity fails"),
        Property::Realroots => match seq::has_real_roots(s) {
            Ok(true) => None,
            Ok(false) => violation(property, None, "polynomial has a non-real root"),
            Err(e) => violation(property, None, e.to_string()),
        },
        Property::Thm2 => {
            let from = seq::decreasing_tail_start(n as u64, alpha as u64).ok()? as usize;
            at(seq::increase_after(s, from), &format!("increase at or after index {from}"))
        }
        Property::Thm4 => {
            let upto = stats.min_maximal_is.div_ceil(2);
            at(seq::decrease_before(s, upto), &format!("decrease before index {upto}"))
        }
        Property::Thm5 => {
            let bound = (n - alpha + 1).div_ceil(2);
            if stats.min_maximal_is < bound {
                return violation(
                    property,
                    None,
                    format!("maximal independent set of size {} < {bound}", stats.min_maximal_is),
                );
            }
            let upto = seq::increasing_head_end(n as u64, alpha as u64).ok()? as usize;
            at(seq::decrease_before(s, upto), &format!("decrease before index {upto}"))
        }
        Property::FisherRyan => at(fisher_ryan_violation(s, alpha), "(i_k / C(alpha,k))^(1/k) increases"),
        Property::Zykov => at(zykov_violation(s, n, alpha), "i_k > C(alpha,k) (n/alpha)^k"),
        Property::Wingard => at(wingard_violation(s, n), "i_k < C(n-k+1, k)"),
        Property::CountingEdges => {
            if n > MAX_COUNTING_EDGES_N {
                return violation(property, None, format!("tree too large for subset enumeration (n={n})"));
            }
            at(counting_edges_violation(tree, s), "sum of e(I) over I_j != (j+1) i_{j+1}")
        }
        Property::Konig => {
            if alpha + stats.mu != n {
                violation(property, None, format!("alpha {alpha} + mu {} != n {n}", stats.mu))
            } else {
                None
            }
        }
    }
}

/// First `k` with `x_k^{k+1} < x_{k+1}^k` where `x_k = i_k / C(alpha, k)`,
/// compared after clearing denominators.
pub fn fisher_ryan_violation(s: &CountSequence, alpha: usize) -> Option<usize> {
    let t = s.terms();
    for k in 1..alpha.min(t.len().saturating_sub(1)) {
        let ck = binomial(alpha as u64, k as u64);
        let ck1 = binomial(alpha as u64, k as u64 + 1);
        let lhs = Pow::pow(&t[k], k as u32 + 1) * Pow::pow(&ck1, k as u32);
        let rhs = Pow::pow(&t[k + 1], k as u32) * Pow::pow(&ck, k as u32 + 1);
        if lhs < rhs {
            return Some(k);
        }
    }
    None
}

/// First `k` with `i_k alpha^k > C(alpha, k) n^k`.
pub fn zykov_violation(s: &CountSequence, n: usize, alpha: usize) -> Option<usize> {
    let (a, nn) = (BigUint::from(alpha), BigUint::from(n));
    let mut ak = BigUint::one();
    let mut nk = BigUint::one();
    for (k, ik) in s.terms().iter().enumerate() {
        if ik * &ak > binomial(alpha as u64, k as u64) * &nk {
            return Some(k);
        }
        ak *= &a;
        nk *= &nn;
    }
    None
}

/// First `k` with `i_k` below the path count `C(n-k+1, k)`.
pub fn wingard_violation(s: &CountSequence, n: usize) -> Option<usize> {
    let zero = BigUint::zero();
    (0..=n).find(|&k| s.terms().get(k).unwrap_or(&zero) < &binomial((n + 1 - k) as u64, k as u64))
}

/// Sums `e(I)` over every independent set by size, via explicit subset
/// enumeration, and returns the first `j` where the sum differs from
/// `(j+1) i_{j+1}`.
pub fn counting_edges_violation(tree: &Tree, s: &CountSequence) -> Option<usize> {
    let n = tree.n();
    let nbr = neighbour_masks(tree);
    let mut sums = vec![0u128; n + 2];
    let mut counts = vec![0u128; n + 2];
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    walk_independent(&nbr, 0, 0, 0, &mut |set, closed| {
        let j = set.count_ones() as usize;
        counts[j] += 1;
        sums[j] += (full & !closed).count_ones() as u128;
    });
    let zero = BigUint::zero();
    for j in 0..=n {
        if BigUint::from(counts[j]) != *s.terms().get(j).unwrap_or(&zero) {
            return Some(j);
        }
        let next = s.terms().get(j + 1).unwrap_or(&zero);
        if BigUint::from(sums[j]) != BigUint::from(j + 1) * next {
            return Some(j);
        }
    }
    None
}

fn neighbour_masks(tree: &Tree) -> Vec<u64> {
    let mut nbr = vec![0u64; tree.n()];
    for &(u, v) in tree.edges() {
        let (a, b) = (u as usize - 1, v as usize - 1);
        nbr[a] |= 1 << b;
        nbr[b] |= 1 << a;
    }
    nbr
}

/// Visits every independent set with its closed neighbourhood.
fn walk_independent(nbr: &[u64], v: usize, set: u64, closed: u64, visit: &mut impl FnMut(u64, u64)) {
    if v == nbr.len() {
        visit(set, closed);
        return;
    }
    walk_independent(nbr, v + 1, set, closed, visit);
    if closed & (1 << v) == 0 && nbr[v] & set == 0 {
        walk_independent(nbr, v + 1, set | (1 << v), closed | (1 << v) | nbr[v], visit);
    }
}

/// Runs every requested property and collects the violations.
pub fn check_all(properties: &[Property], tree: &Tree, stats: &TreeStats) -> Vec<Violation> {
    properties.iter().filter_map(|&p| check(p, tree, stats)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{enumerate_free_trees, tree_from_levels, tree_stats};

    #[test]
    fn names_roundtrip() {
        for p in ALL_PROPERTIES {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert!("olc2".parse::<Property>().is_err());
    }

    #[test]
    fn star_fails_ultra_and_real_roots() {
        let t = Tree::star(4);
        let st = tree_stats(&t);
        let bad = check_all(&ALL_PROPERTIES, &t, &st);
        let names: Vec<Property> = bad.iter().map(|v| v.property).collect();
        assert_eq!(names, vec![Property::Ulc, Property::Realroots]);
        assert_eq!(bad[0].index, Some(2));
    }

    #[test]
    fn theorems_hold_small() {
        let props: Vec<Property> =
            ALL_PROPERTIES.iter().copied().filter(|&p| p != Property::Ulc && p != Property::Realroots).collect();
        for n in 1..=9 {
            let mut it = enumerate_free_trees(n).unwrap();
            while let Some(levels) = it.next_levels() {
                let t = tree_from_levels(&levels);
                let st = tree_stats(&t);
                assert_eq!(check_all(&props, &t, &st), vec![], "{}", t.to_text());
            }
        }
    }

    #[test]
    fn detects_broken_sequences() {
        let s = CountSequence::from_u64s(&[1, 4, 3, 1]).unwrap();
        assert_eq!(wingard_violation(&s, 5), Some(1));
        assert_eq!(zykov_violation(&s, 4, 1), Some(2));
        let s = CountSequence::from_u64s(&[1, 2, 4]).unwrap();
        assert_eq!(fisher_ryan_violation(&s, 2), Some(1));
    }
}
