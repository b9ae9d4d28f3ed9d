//! Exact predicates and transforms on nonnegative integer sequences.
//!
//! Every inequality is decided over arbitrary-precision integers. Rational
//! factors such as `1 + 1/k` are cleared before comparison, so no predicate
//! ever depends on floating point.

use std::fmt;

use num_bigint::BigInt;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SeqError {
    #[error("sequence must have at least one term")]
    Empty,
    #[error("sequence has a trailing zero; trim it before testing real-rootedness")]
    TrailingZero,
    #[error("term {0} is zero but a later term is nonzero")]
    InteriorZero(usize),
    #[error("parameters out of range: {0}")]
    Domain(String),
    #[error("invalid decimal term {0:?}")]
    Parse(String),
}

/// A finite sequence `(a_0, ..., a_m)` of nonnegative integers, typically the
/// counts of independent sets of each size in a graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CountSequence {
    terms: Vec<BigUint>,
}

impl CountSequence {
    pub fn new(terms: Vec<BigUint>) -> Result<Self, SeqError> {
        if terms.is_empty() {
            return Err(SeqError::Empty);
        }
        Ok(CountSequence { terms })
    }

    pub fn from_u64s(terms: &[u64]) -> Result<Self, SeqError> {
        Self::new(terms.iter().map(|&t| BigUint::from(t)).collect())
    }

    pub fn terms(&self) -> &[BigUint] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<BigUint> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest index `m`.
    pub fn degree(&self) -> usize {
        self.terms.len() - 1
    }

    /// Index of the last nonzero term, or `None` if every term is zero.
    pub fn last_nonzero_index(&self) -> Option<usize> {
        self.terms.iter().rposition(|t| !t.is_zero())
    }

    /// Drops trailing zeros, keeping at least one term.
    pub fn trimmed(&self) -> CountSequence {
        let keep = self.last_nonzero_index().map_or(1, |i| i + 1);
        CountSequence { terms: self.terms[..keep].to_vec() }
    }

    /// First index `i` with a zero term strictly between two positive terms.
    pub fn interior_zero(&self) -> Option<usize> {
        let first = self.terms.iter().position(|t| !t.is_zero())?;
        let last = self.last_nonzero_index()?;
        (first..=last).find(|&i| self.terms[i].is_zero())
    }
}

impl fmt::Debug for CountSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.terms.iter().map(|t| t.to_string())).finish()
    }
}

impl fmt::Display for CountSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

// Serialized as a JSON array of decimal strings so values of any size survive.
impl Serialize for CountSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.terms.iter().map(|t| t.to_str_radix(10)))
    }
}

impl<'de> Deserialize<'de> for CountSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(deserializer)?;
        let terms = raw
            .iter()
            .map(|s| BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| D::Error::custom(SeqError::Parse(s.clone()))))
            .collect::<Result<Vec<_>, _>>()?;
        CountSequence::new(terms).map_err(D::Error::custom)
    }
}

/// First index at which unimodality breaks: an ascent that follows a descent.
pub fn unimodal_violation(s: &CountSequence) -> Option<usize> {
    let t = s.terms();
    let mut descending = false;
    for k in 1..t.len() {
        if t[k] < t[k - 1] {
            descending = true;
        } else if t[k] > t[k - 1] && descending {
            return Some(k);
        }
    }
    None
}

pub fn is_unimodal(s: &CountSequence) -> bool {
    unimodal_violation(s).is_none()
}

/// Shared driver for the log-concavity family: checks
/// `left(k) * a_k^2 >= right(k) * a_{k-1} a_{k+1}` at every interior `k`.
/// A zero flanked by positive terms fails at its own index.
fn lc_family_violation(s: &CountSequence, weights: impl Fn(usize) -> (BigUint, BigUint)) -> Option<usize> {
    if let Some(z) = s.interior_zero() {
        return Some(z);
    }
    let t = s.terms();
    for k in 1..t.len().saturating_sub(1) {
        let (left, right) = weights(k);
        if left * &t[k] * &t[k] < right * &t[k - 1] * &t[k + 1] {
            return Some(k);
        }
    }
    None
}

pub fn log_concave_violation(s: &CountSequence) -> Option<usize> {
    lc_family_violation(s, |_| (BigUint::one(), BigUint::one()))
}

pub fn is_log_concave(s: &CountSequence) -> bool {
    log_concave_violation(s).is_none()
}

/// `k a_k^2 >= (k+1) a_{k-1} a_{k+1}`, i.e. `(k! a_k)` log-concave.
pub fn ordered_log_concave_violation(s: &CountSequence) -> Option<usize> {
    lc_family_violation(s, |k| (BigUint::from(k), BigUint::from(k + 1)))
}

pub fn is_ordered_log_concave(s: &CountSequence) -> bool {
    ordered_log_concave_violation(s).is_none()
}

/// `k (m-k) a_k^2 >= (k+1)(m-k+1) a_{k-1} a_{k+1}` with `m` the degree.
pub fn ultra_log_concave_violation(s: &CountSequence) -> Option<usize> {
    let m = s.degree();
    lc_family_violation(s, |k| (BigUint::from(k * (m - k)), BigUint::from((k + 1) * (m - k + 1))))
}

pub fn is_ultra_log_concave(s: &CountSequence) -> bool {
    ultra_log_concave_violation(s).is_none()
}

/// Coefficient sequence of the product polynomial.
pub fn convolve(s: &CountSequence, t: &CountSequence) -> CountSequence {
    let a = s.terms();
    let b = t.terms();
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    CountSequence { terms: out }
}

/// Average number of one-vertex extensions per independent set of each size:
/// value `j` is `(j+1) a_{j+1} / a_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionAverages {
    values: Vec<BigRational>,
}

impl ExtensionAverages {
    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    /// First `j` with `e_{j+1} > e_j`.
    pub fn increase_at(&self) -> Option<usize> {
        self.values.windows(2).position(|w| w[1] > w[0]).map(|j| j + 1)
    }

    pub fn is_weakly_decreasing(&self) -> bool {
        self.increase_at().is_none()
    }
}

/// Extension averages over the nonzero part `(a_0, ..., a_alpha)`.
pub fn extension_averages(s: &CountSequence) -> Result<ExtensionAverages, SeqError> {
    let alpha = s.last_nonzero_index().ok_or(SeqError::InteriorZero(0))?;
    let t = s.terms();
    if let Some(z) = t[..=alpha].iter().position(|x| x.is_zero()) {
        return Err(SeqError::InteriorZero(z));
    }
    let values = (0..alpha)
        .map(|j| BigRational::new(BigInt::from(j + 1) * BigInt::from(t[j + 1].clone()), BigInt::from(t[j].clone())))
        .collect();
    Ok(ExtensionAverages { values })
}

fn ceil_div(num: u64, den: u64) -> u64 {
    num.div_ceil(den)
}

fn check_alpha(n: u64, alpha: u64) -> Result<(), SeqError> {
    if alpha == 0 || alpha > n {
        return Err(SeqError::Domain(format!("need 1 <= alpha <= n, got n={n}, alpha={alpha}")));
    }
    Ok(())
}

/// `ceil(alpha (n-1) / (alpha + n))`: from this index on, the independent set
/// sequence of any graph is weakly decreasing.
pub fn decreasing_tail_start(n: u64, alpha: u64) -> Result<u64, SeqError> {
    check_alpha(n, alpha)?;
    Ok(ceil_div(alpha * (n - 1), alpha + n))
}

/// `ceil((n - alpha + 1) / 4)`: up to this index the independent set sequence
/// of any tree is weakly increasing.
pub fn increasing_head_end(n: u64, alpha: u64) -> Result<u64, SeqError> {
    check_alpha(n, alpha)?;
    Ok(ceil_div(n - alpha + 1, 4))
}

/// First `k >= from` with `a_{k+1} > a_k`, looking only up to the last term.
pub fn increase_after(s: &CountSequence, from: usize) -> Option<usize> {
    let t = s.terms();
    (from..t.len().saturating_sub(1)).find(|&k| t[k + 1] > t[k])
}

/// First `k < upto` with `a_{k+1} < a_k`.
pub fn decrease_before(s: &CountSequence, upto: usize) -> Option<usize> {
    let t = s.terms();
    (0..upto.min(t.len().saturating_sub(1))).find(|&k| t[k + 1] < t[k])
}

/// Largest `h` such that `a_0 <= ... <= a_h`.
pub fn increasing_prefix_end(s: &CountSequence) -> usize {
    decrease_before(s, s.len()).unwrap_or(s.degree())
}

/// Smallest `l` such that `a_l >= ... >= a_m`.
pub fn decreasing_suffix_start(s: &CountSequence) -> usize {
    let t = s.terms();
    (1..t.len()).rev().find(|&k| t[k] > t[k - 1]).unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Real-rootedness via Sturm sequences over the rationals.

type Poly = Vec<BigRational>;

fn trim_poly(p: &mut Poly) {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn is_zero_poly(p: &Poly) -> bool {
    p.iter().all(Zero::is_zero)
}

fn derivative(p: &Poly) -> Poly {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect()
}

/// Polynomial division `a = q b + r`.
fn div_rem(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    trim_poly(&mut r);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (vec![BigRational::zero()], r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    while r.len() >= b.len() && !is_zero_poly(&r) {
        let shift = r.len() - b.len();
        let coef = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] -= &coef * c;
        }
        q[shift] = coef;
        r.pop();
        trim_poly(&mut r);
    }
    trim_poly(&mut r);
    (q, r)
}

fn gcd_poly(a: &Poly, b: &Poly) -> Poly {
    let (mut x, mut y) = (a.clone(), b.clone());
    trim_poly(&mut x);
    trim_poly(&mut y);
    while !is_zero_poly(&y) {
        let (_, r) = div_rem(&x, &y);
        x = y;
        y = r;
    }
    x
}

/// Sign of a polynomial at +inf (`at_pos`) or -inf.
fn sign_at_infinity(p: &Poly, at_pos: bool) -> i32 {
    let lead = p.last().unwrap();
    let s = if lead.is_positive() {
        1
    } else if lead.is_negative() {
        -1
    } else {
        0
    };
    if !at_pos && (p.len() - 1) % 2 == 1 {
        -s
    } else {
        s
    }
}

fn sign_changes(signs: impl Iterator<Item = i32>) -> usize {
    let nonzero: Vec<i32> = signs.filter(|&s| s != 0).collect();
    nonzero.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots, by a Sturm chain.
fn distinct_real_roots(p: &Poly) -> usize {
    let mut chain = vec![p.clone(), derivative(p)];
    loop {
        let n = chain.len();
        if is_zero_poly(&chain[n - 1]) {
            chain.pop();
            break;
        }
        let (_, r) = div_rem(&chain[n - 2], &chain[n - 1]);
        if is_zero_poly(&r) {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    let neg = sign_changes(chain.iter().map(|q| sign_at_infinity(q, false)));
    let pos = sign_changes(chain.iter().map(|q| sign_at_infinity(q, true)));
    neg - pos
}

/// Whether `sum a_k x^k` has only real roots. The square-free part is tested,
/// which has the same root set.
pub fn has_real_roots(s: &CountSequence) -> Result<bool, SeqError> {
    if s.terms().last().is_some_and(Zero::is_zero) {
        return Err(SeqError::TrailingZero);
    }
    let p: Poly = s.terms().iter().map(|t| BigRational::from_integer(BigInt::from(t.clone()))).collect();
    if p.len() <= 1 {
        return Ok(true);
    }
    let g = gcd_poly(&p, &derivative(&p));
    let (sqfree, _) = div_rem(&p, &g);
    let deg = sqfree.len() - 1;
    Ok(distinct_real_roots(&sqfree) == deg)
}

/// Binomial coefficient as a big integer; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Converts small counts for reporting; `None` if the term does not fit.
pub fn term_u64(s: &CountSequence, k: usize) -> Option<u64> {
    s.terms().get(k).and_then(ToPrimitive::to_u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u64]) -> CountSequence {
        CountSequence::from_u64s(v).unwrap()
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(CountSequence::new(vec![]), Err(SeqError::Empty));
    }

    #[test]
    fn unimodality() {
        assert!(is_unimodal(&seq(&[1, 4, 3, 1])));
        assert!(!is_unimodal(&seq(&[1, 3, 2, 3])));
        assert_eq!(unimodal_violation(&seq(&[1, 3, 2, 3])), Some(3));
        assert!(is_unimodal(&seq(&[5])));
        assert!(is_unimodal(&seq(&[2, 2, 2])));
    }

    #[test]
    fn log_concavity() {
        assert!(is_log_concave(&seq(&[1, 2, 1])));
        assert!(!is_log_concave(&seq(&[1, 1, 2])));
        // internal zero flanked by positives
        assert_eq!(log_concave_violation(&seq(&[1, 0, 0, 1])), Some(1));
        assert!(is_log_concave(&seq(&[0, 0, 1, 2, 1, 0])));
    }

    #[test]
    fn ordered_log_concavity() {
        assert!(is_ordered_log_concave(&seq(&[1, 4, 3, 1])));
        assert!(!is_ordered_log_concave(&seq(&[1, 1, 1])));
    }

    #[test]
    fn ultra_log_concavity() {
        // the 4-vertex star
        assert!(!is_ultra_log_concave(&seq(&[1, 4, 3, 1])));
        assert!(is_ultra_log_concave(&seq(&[1, 2, 1])));
        for n in 0..20 {
            assert!(is_ultra_log_concave(&seq(&[1, n])));
        }
    }

    #[test]
    fn real_roots() {
        assert!(has_real_roots(&seq(&[1, 2, 1])).unwrap());
        assert!(!has_real_roots(&seq(&[1, 1, 1])).unwrap());
        assert!(!has_real_roots(&seq(&[1, 4, 3, 1])).unwrap());
        assert_eq!(has_real_roots(&seq(&[1, 2, 0])), Err(SeqError::TrailingZero));
        // (1+x)^3 (1+2x): repeated roots
        assert!(has_real_roots(&seq(&[1, 5, 9, 7, 2])).unwrap());
        // x^2 (1+x): zero roots
        assert!(has_real_roots(&seq(&[0, 0, 1, 1])).unwrap());
        assert!(has_real_roots(&seq(&[7])).unwrap());
    }

    #[test]
    fn sturm_counts_one_root_for_star() {
        let p: Poly = [1, 4, 3, 1].iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect();
        assert_eq!(distinct_real_roots(&p), 1);
    }

    #[test]
    fn convolution() {
        assert_eq!(convolve(&seq(&[1, 1]), &seq(&[1, 1])), seq(&[1, 2, 1]));
        assert_eq!(convolve(&seq(&[1]), &seq(&[1, 4, 3, 1])), seq(&[1, 4, 3, 1]));
    }

    #[test]
    fn extension_average_values() {
        let e = extension_averages(&seq(&[1, 4, 3, 1])).unwrap();
        let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        assert_eq!(e.values(), &[r(4, 1), r(3, 2), r(1, 1)]);
        assert!(e.is_weakly_decreasing());
        let e = extension_averages(&seq(&[1, 1])).unwrap();
        assert_eq!(e.values(), &[r(1, 1)]);
        assert_eq!(extension_averages(&seq(&[1, 0, 2])), Err(SeqError::InteriorZero(1)));
    }

    #[test]
    fn tail_and_head_indices() {
        assert_eq!(decreasing_tail_start(2, 1).unwrap(), 1);
        assert_eq!(increasing_head_end(4, 3).unwrap(), 1);
        assert!(decreasing_tail_start(3, 0).is_err());
        assert!(increasing_head_end(3, 4).is_err());
        for alpha in 1..200u64 {
            let n = 2 * alpha;
            let l = decreasing_tail_start(n, alpha).unwrap();
            assert!(l <= (2 * alpha - 1).div_ceil(3));
            assert_eq!(increasing_head_end(n, alpha).unwrap(), (alpha + 1).div_ceil(4));
        }
    }

    #[test]
    fn monotone_breakpoints() {
        let s = seq(&[1, 4, 6, 6, 3, 1]);
        assert_eq!(increasing_prefix_end(&s), 3);
        assert_eq!(decreasing_suffix_start(&s), 2);
        assert_eq!(increase_after(&s, 0), Some(0));
        assert_eq!(increase_after(&s, 2), None);
        assert_eq!(decrease_before(&s, 3), None);
        assert_eq!(decrease_before(&s, 4), Some(3));
    }

    #[test]
    fn json_roundtrip_big_terms() {
        let big = BigUint::parse_bytes(b"123456789012345678901234567890", 10).unwrap();
        let s = CountSequence::new(vec![BigUint::one(), big]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"["1","123456789012345678901234567890"]"#);
        let back: CountSequence = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<CountSequence>("[]").is_err());
        assert!(serde_json::from_str::<CountSequence>(r#"["x"]"#).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
    }
}
