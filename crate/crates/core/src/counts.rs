//! Exact counting formulas over uniformly random labelled trees on `[n]`.
//!
//! All quantities are rationals evaluated without rounding. The alternating
//! sums cancel catastrophically in floating point, so the closed forms are
//! evaluated over big integers with denominators cleared, and cross-checked
//! against a brute-force census of all `n^(n-2)` Prüfer codes.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::seq::binomial;
use crate::tree::{prufer_decode, PruferCode};

/// Exact rational scalar used for probabilities and expectations.
pub type ExactScalar = BigRational;

/// Largest `n` for which the brute-force census is offered.
pub const MAX_CENSUS_N: usize = 9;

/// Format tag written into every oracle fixture record.
pub const ORACLE_FORMAT: &str = "treeseq-oracle/1";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CountsError {
    #[error("parameters out of range: {0}")]
    Domain(String),
    #[error("brute-force census supports 2 <= n <= {MAX_CENSUS_N}, got {0}")]
    CensusRange(usize),
    #[error("closed form produced a non-integer count {0}")]
    NotInteger(String),
}

fn domain(msg: String) -> CountsError {
    CountsError::Domain(msg)
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

fn ratio(num: BigInt, den: BigInt) -> ExactScalar {
    BigRational::new(num, den)
}

fn to_rational(x: BigUint) -> ExactScalar {
    BigRational::from_integer(BigInt::from(x))
}

/// `base^exp` for a possibly negative exponent; `None` on `0^negative`.
fn rpow(base: &ExactScalar, exp: i64) -> Option<ExactScalar> {
    if exp >= 0 {
        Some(num_traits::pow(base.clone(), exp as usize))
    } else if base.is_zero() {
        None
    } else {
        Some(num_traits::pow(base.recip(), (-exp) as usize))
    }
}

/// `1 - a/n`.
fn one_minus(a: u64, n: u64) -> ExactScalar {
    ratio(big(n) - big(a), big(n))
}

/// Number of labelled trees on `[n]` in which a fixed `k`-set `K` is
/// independent and a fixed disjoint `l`-set has no edge to `K`:
/// `n^(n-k-l-1) (n-k)^(l-1) (n-k-l)^k`.
pub fn trees_with_independent_set_avoiding(n: u64, k: u64, l: u64) -> Result<BigUint, CountsError> {
    if n < 2 || k < 1 || k + l > n {
        return Err(domain(format!("need n >= 2, k >= 1, k + l <= n; got n={n}, k={k}, l={l}")));
    }
    if k + l == n {
        // K ∪ L is everything and K has no neighbour: impossible when connected
        return Ok(BigUint::zero());
    }
    let n_r = to_rational(BigUint::from(n));
    let value = rpow(&n_r, n as i64 - 2).expect("n > 0")
        * rpow(&one_minus(k, n), l as i64 - 1).expect("k < n")
        * rpow(&one_minus(k + l, n), k as i64).expect("nonnegative exponent");
    if !value.is_integer() {
        return Err(CountsError::NotInteger(value.to_string()));
    }
    value.to_integer().to_biguint().ok_or_else(|| CountsError::NotInteger(value.to_string()))
}

fn check_nkt(n: u64, k: u64, t: u64) -> Result<(), CountsError> {
    if n < 2 || k < 1 || k >= n || k + t > n {
        return Err(domain(format!("need n >= 2, 1 <= k < n, k + t <= n; got n={n}, k={k}, t={t}")));
    }
    Ok(())
}

/// Probability that a fixed `k`-set is independent and has exactly `t`
/// extensions, by inclusion-exclusion over Matrix-Tree counts.
pub fn e_nkt(n: u64, k: u64, t: u64) -> Result<ExactScalar, CountsError> {
    check_nkt(n, k, t)?;
    // Each summand times n^(n-1) (n-k) is the integer
    // (n-k)^(t+l) (n-k-t-l)^k n^(n-k-t-l).
    let big_n = n - k - t;
    let mut sum = BigInt::zero();
    for l in 0..=big_n {
        let term = BigInt::from(binomial(big_n, l))
            * num_traits::pow(big(n - k), (t + l) as usize)
            * num_traits::pow(big(n - k - t - l), k as usize)
            * num_traits::pow(big(n), (n - k - t - l) as usize);
        if l % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let den = num_traits::pow(big(n), (n - 1) as usize) * big(n - k);
    Ok(ratio(BigInt::from(binomial(n - k, t)) * sum, den))
}

/// Expected number of independent `k`-sets with exactly `t` extensions,
/// `C(n,k) e(n,k,t)`.
pub fn f_nkt_alternating(n: u64, k: u64, t: u64) -> Result<ExactScalar, CountsError> {
    Ok(to_rational(binomial(n, k)) * e_nkt(n, k, t)?)
}

/// Prefactor `C(n,k) C(n-k,t) (1-k/n)^(t-1) (1-(k+t)/n)^k`.
pub fn a_nkt(n: u64, k: u64, t: u64) -> Result<ExactScalar, CountsError> {
    check_nkt(n, k, t)?;
    Ok(to_rational(binomial(n, k) * binomial(n - k, t))
        * rpow(&one_minus(k, n), t as i64 - 1).expect("k < n")
        * rpow(&one_minus(k + t, n), k as i64).expect("nonnegative exponent"))
}

/// The same quantity as [`f_nkt_alternating`], evaluated through Stirling
/// numbers of the second kind and falling powers. Needs `k + t < n`.
pub fn f_nkt_stirling(n: u64, k: u64, t: u64) -> Result<ExactScalar, CountsError> {
    check_nkt(n, k, t)?;
    if k + t == n {
        return Err(domain(format!("Stirling form needs k + t < n; got n={n}, k={k}, t={t}")));
    }
    let big_n = n - k - t;
    let row = stirling2_row(k);
    let mut sum = ExactScalar::zero();
    let n_over_k = ratio(big(n), big(k));
    for (j, s) in row.iter().enumerate().skip(1) {
        if s.is_zero() {
            continue;
        }
        sum += to_rational(s * falling(big_n, j as u64)) * num_traits::pow(n_over_k.clone(), j);
    }
    let scale = a_nkt(n, k, t)? * num_traits::pow(ratio(big(k), big(n)), big_n as usize)
        / to_rational(num_traits::pow(BigUint::from(big_n), k as usize));
    Ok(scale * sum)
}

fn check_g(n: u64, k: u64) -> Result<(), CountsError> {
    if k < 1 || k + 2 > n {
        return Err(domain(format!("need 1 <= k and k + 2 <= n; got n={n}, k={k}")));
    }
    Ok(())
}

/// Expected number of independent `k`-sets with at most `k + 1` extensions.
pub fn g1(n: u64, k: u64) -> Result<ExactScalar, CountsError> {
    check_g(n, k)?;
    (0..=(k + 1).min(n - k)).try_fold(ExactScalar::zero(), |acc, t| Ok(acc + f_nkt_alternating(n, k, t)?))
}

/// Expected number of independent `k`-sets with at least `k + 1` extensions.
pub fn g2(n: u64, k: u64) -> Result<ExactScalar, CountsError> {
    check_g(n, k)?;
    (k + 1..=n - k).try_fold(ExactScalar::zero(), |acc, t| Ok(acc + f_nkt_alternating(n, k, t)?))
}

/// `E(X_k) = C(n,k) (1-k/n)^(k-1)`, the expected number of independent
/// `k`-sets in a uniform labelled tree.
pub fn expected_ik(n: u64, k: u64) -> Result<ExactScalar, CountsError> {
    if n < 1 || k > n {
        return Err(domain(format!("need n >= 1 and k <= n; got n={n}, k={k}")));
    }
    if k == n {
        // only the single vertex has an independent n-set
        return Ok(if n == 1 { ExactScalar::one() } else { ExactScalar::zero() });
    }
    Ok(to_rational(binomial(n, k)) * rpow(&one_minus(k, n), k as i64 - 1).expect("k < n"))
}

/// Probability that a fixed `k`-set is independent, `(1-k/n)^(k-1)`.
pub fn prob_independent(n: u64, k: u64) -> Result<ExactScalar, CountsError> {
    check_nkt(n, k, 0)?;
    Ok(rpow(&one_minus(k, n), k as i64 - 1).expect("k < n"))
}

/// Row `k` of the Stirling numbers of the second kind, `S(k, 0..=k)`.
pub fn stirling2_row(k: u64) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for m in 1..=k as usize {
        let mut next = vec![BigUint::zero(); m + 1];
        for j in 1..=m {
            let carry = if j < row.len() { &row[j] * BigUint::from(j) } else { BigUint::zero() };
            next[j] = carry + &row[j - 1];
        }
        row = next;
    }
    row
}

pub fn stirling2(k: u64, j: u64) -> BigUint {
    if j > k {
        return BigUint::zero();
    }
    stirling2_row(k).swap_remove(j as usize)
}

/// Falling power `(x)_j = x (x-1) ... (x-j+1)`.
pub fn falling(x: u64, j: u64) -> BigUint {
    if j > x {
        return BigUint::zero();
    }
    (0..j).map(|i| BigUint::from(x - i)).product()
}

/// Distribution of the extension count of a fixed `k`-set: entry `t` is
/// `e(n,k,t)`, for `t = 0..=n-k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionProfile {
    pub n: u64,
    pub k: u64,
    pub probs: Vec<ExactScalar>,
}

impl ExtensionProfile {
    pub fn from_formula(n: u64, k: u64) -> Result<ExtensionProfile, CountsError> {
        check_nkt(n, k, 0)?;
        let probs = (0..=n - k).map(|t| e_nkt(n, k, t)).collect::<Result<_, _>>()?;
        Ok(ExtensionProfile { n, k, probs })
    }

    pub fn total(&self) -> ExactScalar {
        self.probs.iter().fold(ExactScalar::zero(), |a, b| a + b)
    }
}

/// Tallies over labelled trees on `[n]`, for the sets `K = {1..k}`:
/// `extensions[k][t]` counts trees where `K` is independent with exactly `t`
/// extensions; `avoiding[k][l]` counts trees where `K` is independent and
/// `{k+1..k+l}` has no edge to `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledCensus {
    pub n: usize,
    pub trees: u64,
    pub extensions: Vec<Vec<u64>>,
    pub avoiding: Vec<Vec<u64>>,
}

impl LabelledCensus {
    fn empty(n: usize) -> LabelledCensus {
        LabelledCensus {
            n,
            trees: 0,
            extensions: (0..=n).map(|k| vec![0; n - k + 1]).collect(),
            avoiding: (0..=n).map(|k| vec![0; n - k + 1]).collect(),
        }
    }

    /// Adds another partial census; exact, so merge order is irrelevant.
    pub fn merge(&mut self, other: &LabelledCensus) {
        assert_eq!(self.n, other.n);
        self.trees += other.trees;
        for (a, b) in self.extensions.iter_mut().zip(&other.extensions) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.avoiding.iter_mut().zip(&other.avoiding) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    fn record(&mut self, adjacency: &[u32]) {
        let n = self.n;
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        self.trees += 1;
        let mut nbr = 0u32;
        for k in 1..=n {
            let v = k - 1;
            // K = {0..k-1}; stop once K stops being independent
            if nbr & (1 << v) != 0 {
                break;
            }
            nbr |= adjacency[v];
            let kmask = (1u32 << k) - 1;
            if nbr & kmask != 0 {
                break;
            }
            if k < n {
                let t = (full & !kmask & !nbr).count_ones() as usize;
                self.extensions[k][t] += 1;
            }
            let first_blocked = (nbr >> k).trailing_zeros() as usize;
            let l_max = first_blocked.min(n - k);
            for l in 0..=l_max {
                self.avoiding[k][l] += 1;
            }
        }
    }
}

fn check_census(n: usize) -> Result<(), CountsError> {
    if !(2..=MAX_CENSUS_N).contains(&n) {
        return Err(CountsError::CensusRange(n));
    }
    Ok(())
}

/// Census restricted to Prüfer codes that start with `prefix`.
pub fn census_for_prefix(n: usize, prefix: &[u32]) -> Result<LabelledCensus, CountsError> {
    check_census(n)?;
    let len = n - 2;
    if prefix.len() > len || prefix.iter().any(|&s| s == 0 || s as usize > n) {
        return Err(domain(format!("bad code prefix {prefix:?} for n={n}")));
    }
    let mut census = LabelledCensus::empty(n);
    let mut code: Vec<u32> = prefix.to_vec();
    code.resize(len, 1);
    let free = len - prefix.len();
    let mut adjacency = vec![0u32; n];
    loop {
        let tree = prufer_decode(&PruferCode::new(n, code.clone()).expect("valid code"));
        adjacency.iter_mut().for_each(|a| *a = 0);
        for &(u, v) in tree.edges() {
            adjacency[u as usize - 1] |= 1 << (v - 1);
            adjacency[v as usize - 1] |= 1 << (u - 1);
        }
        census.record(&adjacency);
        // odometer over the free suffix
        let mut i = len;
        loop {
            if i == len - free {
                return Ok(census);
            }
            i -= 1;
            if (code[i] as usize) < n {
                code[i] += 1;
                break;
            }
            code[i] = 1;
        }
    }
}

/// Census over all `n^(n-2)` labelled trees.
pub fn brute_force_census(n: usize) -> Result<LabelledCensus, CountsError> {
    census_for_prefix(n, &[])
}

/// Empirical-exact extension profile of `{1..k}` over all labelled trees.
pub fn brute_force_profile(n: usize, k: usize) -> Result<ExtensionProfile, CountsError> {
    let census = brute_force_census(n)?;
    profile_from_census(&census, k)
}

pub fn profile_from_census(census: &LabelledCensus, k: usize) -> Result<ExtensionProfile, CountsError> {
    let n = census.n;
    if k < 1 || k >= n {
        return Err(domain(format!("need 1 <= k < n; got n={n}, k={k}")));
    }
    let total = big(census.trees);
    let probs = census.extensions[k].iter().map(|&c| ratio(big(c), total.clone())).collect();
    Ok(ExtensionProfile { n: n as u64, k: k as u64, probs })
}

/// One fixture line: an extension probability (`kind = "e"`, with `t`) or a
/// tree count (`kind = "avoid"`, with `l`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub format: String,
    pub kind: String,
    pub n: u64,
    pub k: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l: Option<u64>,
    pub num: String,
    pub den: String,
}

impl OracleRecord {
    fn e(n: u64, k: u64, t: u64, value: &ExactScalar) -> OracleRecord {
        OracleRecord {
            format: ORACLE_FORMAT.into(),
            kind: "e".into(),
            n,
            k,
            t: Some(t),
            l: None,
            num: value.numer().to_string(),
            den: value.denom().to_string(),
        }
    }

    fn avoid(n: u64, k: u64, l: u64, count: &BigUint) -> OracleRecord {
        OracleRecord {
            format: ORACLE_FORMAT.into(),
            kind: "avoid".into(),
            n,
            k,
            t: None,
            l: Some(l),
            num: count.to_string(),
            den: "1".into(),
        }
    }

    pub fn value(&self) -> Option<ExactScalar> {
        let num = BigInt::parse_bytes(self.num.as_bytes(), 10)?;
        let den = BigInt::parse_bytes(self.den.as_bytes(), 10)?;
        (!den.is_zero()).then(|| ratio(num, den))
    }
}

/// Fixture records derived from a brute-force census.
pub fn census_records(census: &LabelledCensus) -> Vec<OracleRecord> {
    let n = census.n as u64;
    let mut out = Vec::new();
    for k in 1..n {
        let profile = profile_from_census(census, k as usize).expect("k in range");
        for (t, p) in profile.probs.iter().enumerate() {
            out.push(OracleRecord::e(n, k, t as u64, p));
        }
    }
    for k in 1..=n {
        for l in 0..=n - k {
            let c = BigUint::from(census.avoiding[k as usize][l as usize]);
            out.push(OracleRecord::avoid(n, k, l, &c));
        }
    }
    out
}

/// The same records computed from the closed forms.
pub fn formula_records(n: u64) -> Result<Vec<OracleRecord>, CountsError> {
    let mut out = Vec::new();
    for k in 1..n {
        for t in 0..=n - k {
            out.push(OracleRecord::e(n, k, t, &e_nkt(n, k, t)?));
        }
    }
    for k in 1..=n {
        for l in 0..=n - k {
            out.push(OracleRecord::avoid(n, k, l, &trees_with_independent_set_avoiding(n, k, l)?));
        }
    }
    Ok(out)
}

/// Lossy conversion for display.
pub fn to_f64(x: &ExactScalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Whether an exact scalar lies in `[0, 1]`.
pub fn is_probability(x: &ExactScalar) -> bool {
    !x.is_negative() && *x <= ExactScalar::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> ExactScalar {
        ratio(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn avoiding_examples() {
        assert_eq!(trees_with_independent_set_avoiding(4, 2, 0).unwrap(), BigUint::from(8u32));
        assert_eq!(trees_with_independent_set_avoiding(3, 1, 0).unwrap(), BigUint::from(3u32));
        assert_eq!(trees_with_independent_set_avoiding(4, 1, 1).unwrap(), BigUint::from(8u32));
        assert_eq!(trees_with_independent_set_avoiding(4, 4, 0).unwrap(), BigUint::zero());
        assert!(trees_with_independent_set_avoiding(4, 0, 1).is_err());
        assert!(trees_with_independent_set_avoiding(4, 3, 2).is_err());
    }

    #[test]
    fn e_examples() {
        assert_eq!(e_nkt(3, 1, 0).unwrap(), r(1, 3));
        assert_eq!(e_nkt(3, 1, 2).unwrap(), r(0, 1));
        assert_eq!(e_nkt(4, 2, 0).unwrap(), r(3, 8));
        assert!(e_nkt(4, 4, 0).is_err());
        assert!(e_nkt(4, 2, 3).is_err());
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_nkt_alternating(4, 2, 0).unwrap(), r(9, 4));
        assert_eq!(f_nkt_stirling(4, 2, 0).unwrap(), r(9, 4));
        for n in 2..12 {
            assert!(f_nkt_alternating(n, 1, n - 1).unwrap().is_zero());
        }
        assert!(f_nkt_stirling(5, 2, 3).is_err());
    }

    #[test]
    fn g_examples() {
        assert_eq!(g1(4, 2).unwrap(), r(3, 1));
        // vertex 1 is a leaf in (3/4)^2 of trees, giving exactly 2 extensions
        assert_eq!(g2(4, 1).unwrap(), r(9, 4));
        assert!(g1(4, 3).is_err());
        for n in 3..12u64 {
            for k in 1..=n - 2 {
                let both = g1(n, k).unwrap() + g2(n, k).unwrap();
                let overlap = if 2 * k < n { f_nkt_alternating(n, k, k + 1).unwrap() } else { r(0, 1) };
                assert_eq!(both - overlap, expected_ik(n, k).unwrap(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn expectation_examples() {
        for n in 1..20 {
            assert_eq!(expected_ik(n, 1).unwrap(), r(n as i64, 1));
            assert_eq!(expected_ik(n, 0).unwrap(), r(1, 1));
        }
        assert_eq!(expected_ik(4, 2).unwrap(), r(3, 1));
        assert_eq!(expected_ik(1, 1).unwrap(), r(1, 1));
        assert_eq!(expected_ik(3, 3).unwrap(), r(0, 1));
    }

    #[test]
    fn stirling_and_falling() {
        assert_eq!(stirling2(4, 2), BigUint::from(7u32));
        for k in 1..15 {
            assert_eq!(stirling2(k, k), BigUint::one());
            assert_eq!(stirling2(k, 0), BigUint::zero());
        }
        assert_eq!(stirling2(0, 0), BigUint::one());
        assert_eq!(stirling2(3, 5), BigUint::zero());
        assert_eq!(falling(5, 2), BigUint::from(20u32));
        assert_eq!(falling(5, 0), BigUint::one());
        assert_eq!(falling(3, 4), BigUint::zero());
    }

    #[test]
    fn census_small() {
        let c = brute_force_census(3).unwrap();
        assert_eq!(c.trees, 3);
        let p = profile_from_census(&c, 1).unwrap();
        assert_eq!(p.probs, vec![r(1, 3), r(2, 3), r(0, 1)]);
        assert!(brute_force_census(1).is_err());
        assert!(brute_force_census(10).is_err());
        assert!(census_for_prefix(5, &[6]).is_err());
    }

    #[test]
    fn census_prefixes_merge_to_whole() {
        let whole = brute_force_census(6).unwrap();
        let mut merged = LabelledCensus::empty(6);
        for s in 1..=6 {
            merged.merge(&census_for_prefix(6, &[s]).unwrap());
        }
        assert_eq!(merged, whole);
        assert_eq!(whole.trees, 6u64.pow(4));
    }

    #[test]
    fn record_json_shape() {
        let rec = OracleRecord::e(3, 1, 0, &r(1, 3));
        let j = serde_json::to_string(&rec).unwrap();
        assert_eq!(j, r#"{"format":"treeseq-oracle/1","kind":"e","n":3,"k":1,"t":0,"num":"1","den":"3"}"#);
        let back: OracleRecord = serde_json::from_str(&j).unwrap();
        assert_eq!(back.value().unwrap(), r(1, 3));
    }
}
