//! Interval arithmetic kernels and the elementary functions built on them.
//!
//! [`Kernel`] is the set of outward-rounded ring operations an interval type
//! must provide. `exp`, `ln`, powers and binary entropy are written once on
//! top of it, using argument reduction and Taylor or `atanh` series with an
//! explicit remainder bound, so every kernel gets enclosures whose error is
//! accounted for rather than assumed.

use std::f64::consts::LN_2;
use std::fmt;

use super::CertError;

pub trait Kernel: Clone + fmt::Debug + Sized {
    /// Per-evaluation parameters (the significand width for software kernels).
    type Ctx: Copy + fmt::Debug;

    fn bits(ctx: Self::Ctx) -> u32;
    fn ctx(&self) -> Self::Ctx;

    /// Enclosure of the rational `num/den`, `den > 0`.
    fn ratio(ctx: Self::Ctx, num: i64, den: i64) -> Self;
    /// Exact point enclosure of a finite `f64`.
    fn from_f64(ctx: Self::Ctx, x: f64) -> Self;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Result<Self, CertError>;
    fn neg(&self) -> Self;
    /// Multiplication by `2^k`.
    fn scale2(&self, k: i64) -> Self;

    /// A double no larger than the lower endpoint.
    fn lo_f64(&self) -> f64;
    /// A double no smaller than the upper endpoint.
    fn hi_f64(&self) -> f64;
    fn mid_f64(&self) -> f64 {
        0.5 * self.lo_f64() + 0.5 * self.hi_f64()
    }

    fn lo_point(&self) -> Self;
    fn hi_point(&self) -> Self;
    /// `[lo.lo, hi.hi]`.
    fn span(lo: &Self, hi: &Self) -> Self;
    fn min(&self, other: &Self) -> Self;
    fn max(&self, other: &Self) -> Self;

    /// Lower endpoint strictly positive.
    fn is_positive(&self) -> bool;
    /// Every point of `self` is below every point of `other`.
    fn certainly_lt(&self, other: &Self) -> bool;

    /// Adds `[-r, r]`.
    fn widen_abs(&self, r: f64) -> Self;

    fn ln2(ctx: Self::Ctx) -> Self;

    fn int(ctx: Self::Ctx, n: i64) -> Self {
        Self::ratio(ctx, n, 1)
    }

    fn mag(&self) -> f64 {
        self.lo_f64().abs().max(self.hi_f64().abs())
    }
}

fn series_eps(bits: u32) -> f64 {
    (-(bits as f64) - 3.0).exp2()
}

fn max_terms(bits: u32) -> usize {
    4 * bits as usize + 16
}

/// `ln 2 = 2 atanh(1/3)`, for kernels without a tabulated constant.
pub fn ln2_series<K: Kernel>(ctx: K::Ctx) -> K {
    let s = K::ratio(ctx, 1, 3);
    let s2 = K::ratio(ctx, 1, 9);
    let eps = series_eps(K::bits(ctx));
    let mut power = s.clone();
    let mut sum = s;
    let mut j = 1i64;
    loop {
        power = power.mul(&s2);
        let term = power.div(&K::int(ctx, 2 * j + 1)).expect("odd divisor");
        sum = sum.add(&term);
        if term.mag() < eps {
            // remaining terms are below term * (1/9)/(1 - 1/9)
            return sum.widen_abs(term.mag()).scale2(1);
        }
        j += 1;
    }
}

/// Enclosure of `e^x`.
pub fn exp<K: Kernel>(x: &K) -> Result<K, CertError> {
    let ctx = x.ctx();
    let mid = x.mid_f64();
    if !mid.is_finite() || mid > 1.0e6 {
        return Err(CertError::Domain(format!("exp argument out of range: {mid}")));
    }
    let k = (mid / LN_2).round() as i64;
    let r = x.sub(&K::ln2(ctx).mul(&K::int(ctx, k)));
    if r.mag() > 0.5 {
        return Err(CertError::Domain(format!("exp argument too wide: {x:?}")));
    }
    let eps = series_eps(K::bits(ctx));
    let mut terms = vec![K::int(ctx, 1)];
    for i in 1..max_terms(K::bits(ctx)) {
        let term = terms[i - 1].mul(&r).div(&K::int(ctx, i as i64))?;
        let small = term.mag() < eps;
        terms.push(term);
        if small {
            // with |r| <= 1/2 the tail is at most |term| * (|r|/(i+1)) / (1 - |r|/(i+1))
            let last = terms.pop().expect("just pushed");
            let tail = last.widen_abs(last.mag());
            let sum = terms.iter().rev().fold(tail, |acc, t| acc.add(t));
            return Ok(sum.scale2(k));
        }
    }
    Err(CertError::Domain("exp series did not converge".into()))
}

/// Enclosure of `ln x` for `x > 0`.
pub fn ln<K: Kernel>(x: &K) -> Result<K, CertError> {
    if !x.is_positive() {
        return Err(CertError::Domain(format!("ln of non-positive interval {x:?}")));
    }
    let ctx = x.ctx();
    let e = x.mid_f64().log2().round() as i64;
    let m = x.scale2(-e);
    let one = K::int(ctx, 1);
    let s = m.sub(&one).div(&m.add(&one))?;
    let s2 = s.mul(&s);
    if s2.mag() > 0.5 {
        return Err(CertError::Domain(format!("ln argument too wide: {x:?}")));
    }
    let eps = series_eps(K::bits(ctx));
    let mut power = s.clone();
    let mut terms = vec![s];
    for j in 1..max_terms(K::bits(ctx)) {
        power = power.mul(&s2);
        let term = power.div(&K::int(ctx, 2 * j as i64 + 1))?;
        if term.mag() < eps {
            // tail <= |term| s²/(1-s²) <= |term| for s² <= 1/2
            let tail = term.widen_abs(term.mag());
            let atanh = terms.iter().rev().fold(tail, |acc, t| acc.add(t));
            return Ok(atanh.scale2(1).add(&K::ln2(ctx).mul(&K::int(ctx, e))));
        }
        terms.push(term);
    }
    Err(CertError::Domain("ln series did not converge".into()))
}

/// `x^y = e^{y ln x}` for `x > 0`.
pub fn pow<K: Kernel>(x: &K, y: &K) -> Result<K, CertError> {
    exp(&y.mul(&ln(x)?))
}

/// `2^y`.
pub fn exp2<K: Kernel>(y: &K) -> Result<K, CertError> {
    exp(&y.mul(&K::ln2(y.ctx())))
}

/// A rational `num/den` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac {
    pub num: i64,
    pub den: i64,
}

impl Frac {
    pub fn new(num: i64, den: i64) -> Frac {
        assert!(den > 0, "positive denominator");
        Frac { num, den }
    }

    fn clamp01(self) -> Frac {
        if self.num < 0 {
            Frac::new(0, 1)
        } else if self.num > self.den {
            Frac::new(1, 1)
        } else {
            self
        }
    }

    /// Sign of `self - 1/2`.
    fn cmp_half(self) -> std::cmp::Ordering {
        (2 * self.num as i128).cmp(&(self.den as i128))
    }

    pub fn enclose<K: Kernel>(self, ctx: K::Ctx) -> K {
        K::ratio(ctx, self.num, self.den)
    }
}

/// Binary entropy (in bits) at a rational point of `[0, 1]`.
pub fn entropy<K: Kernel>(ctx: K::Ctx, x: Frac) -> Result<K, CertError> {
    let x = x.clamp01();
    if x.num == 0 || x.num == x.den {
        return Ok(K::int(ctx, 0));
    }
    if x.cmp_half().is_eq() {
        return Ok(K::int(ctx, 1));
    }
    let a: K = x.enclose(ctx);
    let b: K = Frac::new(x.den - x.num, x.den).enclose(ctx);
    let nats = a.mul(&ln(&a)?).add(&b.mul(&ln(&b)?)).neg();
    nats.div(&K::ln2(ctx))
}

/// Upper bound for `H` over `[lo, hi]`: `H` rises to 1 at 1/2 and falls after.
pub fn entropy_sup<K: Kernel>(ctx: K::Ctx, lo: Frac, hi: Frac) -> Result<K, CertError> {
    let (lo, hi) = (lo.clamp01(), hi.clamp01());
    if lo.cmp_half().is_le() && hi.cmp_half().is_ge() {
        Ok(K::int(ctx, 1))
    } else if hi.cmp_half().is_lt() {
        entropy(ctx, hi)
    } else {
        entropy(ctx, lo)
    }
}

/// Lower bound for `H` over `[lo, hi]`; by concavity the minimum is at an end.
pub fn entropy_inf<K: Kernel>(ctx: K::Ctx, lo: Frac, hi: Frac) -> Result<K, CertError> {
    let a: K = entropy(ctx, lo)?;
    let b: K = entropy(ctx, hi)?;
    Ok(a.min(&b))
}

fn widen_down(x: f64) -> f64 {
    x.next_down()
}

fn widen_up(x: f64) -> f64 {
    x.next_up()
}

/// Interval with `f64` endpoints. Each operation rounds to nearest and then
/// steps one ulp outward, which contains the exact result because IEEE
/// operations are correctly rounded.
#[derive(Clone, Copy, PartialEq)]
pub struct Enclosure {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64) -> Enclosure {
        assert!(lo <= hi, "empty enclosure [{lo}, {hi}]");
        Enclosure { lo, hi }
    }

    pub fn point(x: f64) -> Enclosure {
        Enclosure { lo: x, hi: x }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn outward(lo: f64, hi: f64) -> Enclosure {
        Enclosure { lo: widen_down(lo), hi: widen_up(hi) }
    }

    fn ldexp_dir(mut x: f64, mut k: i64, up: bool) -> f64 {
        // multiply in exact power-of-two chunks, stepping outward after any
        // chunk that may have left the normal range
        while k != 0 {
            let step = k.clamp(-1000, 1000);
            k -= step;
            x *= 2f64.powi(step as i32);
            if x == 0.0 || x.abs() < f64::MIN_POSITIVE || x.is_infinite() {
                x = if up { widen_up(x) } else { widen_down(x) };
            }
        }
        x
    }
}

impl Kernel for Enclosure {
    type Ctx = ();

    fn bits(_: ()) -> u32 {
        53
    }

    fn ctx(&self) {}

    fn ratio(_: (), num: i64, den: i64) -> Enclosure {
        let (nf, df) = (num as f64, den as f64);
        if nf as i64 == num && df as i64 == den && num.unsigned_abs() < 1 << 53 && den < 1 << 53 {
            if den == 1 {
                return Enclosure::point(nf);
            }
            let q = nf / df;
            Enclosure::outward(q, q)
        } else {
            let q = nf / df;
            Enclosure::new(widen_down(widen_down(q)), widen_up(widen_up(q)))
        }
    }

    fn from_f64(_: (), x: f64) -> Enclosure {
        Enclosure::point(x)
    }

    fn add(&self, o: &Enclosure) -> Enclosure {
        Enclosure::outward(self.lo + o.lo, self.hi + o.hi)
    }

    fn sub(&self, o: &Enclosure) -> Enclosure {
        Enclosure::outward(self.lo - o.hi, self.hi - o.lo)
    }

    fn mul(&self, o: &Enclosure) -> Enclosure {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Enclosure::outward(lo, hi)
    }

    fn div(&self, o: &Enclosure) -> Result<Enclosure, CertError> {
        if o.lo <= 0.0 && o.hi >= 0.0 {
            return Err(CertError::Domain(format!("division by {o:?}")));
        }
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Enclosure::outward(lo, hi))
    }

    fn neg(&self) -> Enclosure {
        Enclosure { lo: -self.hi, hi: -self.lo }
    }

    fn scale2(&self, k: i64) -> Enclosure {
        Enclosure { lo: Enclosure::ldexp_dir(self.lo, k, false), hi: Enclosure::ldexp_dir(self.hi, k, true) }
    }

    fn lo_f64(&self) -> f64 {
        self.lo
    }

    fn hi_f64(&self) -> f64 {
        self.hi
    }

    fn lo_point(&self) -> Enclosure {
        Enclosure::point(self.lo)
    }

    fn hi_point(&self) -> Enclosure {
        Enclosure::point(self.hi)
    }

    fn span(lo: &Enclosure, hi: &Enclosure) -> Enclosure {
        Enclosure::new(lo.lo, hi.hi)
    }

    fn min(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: self.lo.min(o.lo), hi: self.hi.min(o.hi) }
    }

    fn max(&self, o: &Enclosure) -> Enclosure {
        Enclosure { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }

    fn is_positive(&self) -> bool {
        self.lo > 0.0
    }

    fn certainly_lt(&self, o: &Enclosure) -> bool {
        self.hi < o.lo
    }

    fn widen_abs(&self, r: f64) -> Enclosure {
        Enclosure::outward(self.lo - r, self.hi + r)
    }

    fn ln2(_: ()) -> Enclosure {
        // the constant is the correctly rounded value of ln 2
        Enclosure::outward(LN_2, LN_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_ln_contain_libm() {
        for &x in &[-30.0, -1.0, -0.3, 0.0, 1e-9, 0.5, 1.0, 2.5, 40.0] {
            let e = exp(&Enclosure::point(x)).unwrap();
            assert!(e.contains(x.exp()), "exp({x}) = {} not in {e:?}", x.exp());
            assert!(
                e.width() <= 16.0 * f64::EPSILON * (1.0 + x.abs()) * x.exp(),
                "{x}: {}",
                e.width() / x.exp() / f64::EPSILON
            );
        }
        for &x in &[1e-12, 0.1, 0.5, 1.0, 2.0, 3.0, 1e10] {
            let l = ln(&Enclosure::point(x)).unwrap();
            assert!(l.contains(x.ln()), "ln({x}) = {} not in {l:?}", x.ln());
        }
        assert!(ln(&Enclosure::point(0.0)).is_err());
    }

    #[test]
    fn entropy_points() {
        let h: Enclosure = entropy((), Frac::new(11, 100)).unwrap();
        assert!(h.contains(0.499_915_958_164_528));
        let one: Enclosure = entropy((), Frac::new(50, 100)).unwrap();
        assert_eq!((one.lo(), one.hi()), (1.0, 1.0));
        let sup: Enclosure = entropy_sup((), Frac::new(40, 100), Frac::new(60, 100)).unwrap();
        assert_eq!(sup.hi(), 1.0);
        let inf: Enclosure = entropy_inf((), Frac::new(10, 100), Frac::new(60, 100)).unwrap();
        assert!(inf.hi() < 0.47);
    }

    #[test]
    fn ldexp_underflow_stays_outward() {
        let tiny = Enclosure::point(1.0).scale2(-1100);
        assert!(tiny.hi() > 0.0);
        let e = exp(&Enclosure::point(-1000.0)).unwrap();
        assert!(e.lo() <= 0.0 + f64::MIN_POSITIVE && e.hi() > 0.0);
    }
}
