//! Software interval kernel with dyadic endpoints `m·2^e` rounded outward
//! to a fixed number of significand bits.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::kernel::{ln2_series, Kernel};
use super::CertError;

/// Exact dyadic rational `m · 2^e`.
#[derive(Clone, PartialEq, Eq)]
pub struct Dyadic {
    m: BigInt,
    e: i64,
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.m, self.e)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Down,
    Up,
}

impl Dyadic {
    pub fn zero() -> Dyadic {
        Dyadic { m: BigInt::zero(), e: 0 }
    }

    pub fn new(m: BigInt, e: i64) -> Dyadic {
        Dyadic { m, e }
    }

    /// `(m, e)` with value `m · 2^e`.
    pub fn parts(&self) -> (&BigInt, i64) {
        (&self.m, self.e)
    }

    /// Exact value of a finite double.
    pub fn from_f64(x: f64) -> Dyadic {
        assert!(x.is_finite(), "non-finite {x}");
        if x == 0.0 {
            return Dyadic::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
        Dyadic { m: BigInt::from(sign * m), e }
    }

    fn shr_dir(m: &BigInt, shift: u64, dir: Dir) -> BigInt {
        // BigInt >> rounds toward negative infinity
        match dir {
            Dir::Down => m >> shift,
            Dir::Up => -((-m) >> shift),
        }
    }

    fn round(self, prec: u32, dir: Dir) -> Dyadic {
        let bits = self.m.bits();
        if bits <= prec as u64 {
            return self;
        }
        let shift = bits - prec as u64;
        Dyadic { m: Dyadic::shr_dir(&self.m, shift, dir), e: self.e + shift as i64 }
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = self.e.min(other.e);
        (&self.m << (self.e - e) as u64, &other.m << (other.e - e) as u64, e)
    }

    fn add_exact(&self, other: &Dyadic) -> Dyadic {
        if self.m.is_zero() {
            return other.clone();
        }
        if other.m.is_zero() {
            return self.clone();
        }
        let (a, b, e) = self.aligned(other);
        Dyadic { m: a + b, e }
    }

    fn neg(&self) -> Dyadic {
        Dyadic { m: -&self.m, e: self.e }
    }

    fn mul_exact(&self, other: &Dyadic) -> Dyadic {
        Dyadic { m: &self.m * &other.m, e: self.e + other.e }
    }

    fn div_dir(&self, other: &Dyadic, prec: u32, dir: Dir) -> Dyadic {
        let shift = (prec as i64 + 2 + other.m.bits() as i64 - self.m.bits() as i64).max(0) as u64;
        let num = &self.m << shift;
        let q = match dir {
            Dir::Down => num.div_floor(&other.m),
            Dir::Up => -((-num).div_floor(&other.m)),
        };
        Dyadic { m: q, e: self.e - other.e - shift as i64 }.round(prec, dir)
    }

    fn ratio_dir(num: i64, den: i64, prec: u32, dir: Dir) -> Dyadic {
        Dyadic { m: BigInt::from(num), e: 0 }.div_dir(&Dyadic { m: BigInt::from(den), e: 0 }, prec, dir)
    }

    fn is_negative(&self) -> bool {
        self.m.is_negative()
    }

    fn is_positive(&self) -> bool {
        self.m.is_positive()
    }

    /// Conversion to `f64` rounded in the given direction.
    fn to_f64_dir(&self, dir: Dir) -> f64 {
        if self.m.is_zero() {
            return 0.0;
        }
        let mut r = self.clone().round(53, dir);
        if r.e < -1074 {
            // below the subnormal grid: round onto multiples of 2^-1074
            r = Dyadic { m: Dyadic::shr_dir(&self.m, (-1074 - self.e) as u64, dir), e: -1074 };
            if r.m.is_zero() {
                return 0.0;
            }
        }
        let mant = r.m.to_f64().expect("53-bit mantissa");
        let top = r.e + r.m.bits() as i64;
        if top > 1024 {
            return match (dir, r.m.sign()) {
                (Dir::Up, Sign::Plus) => f64::INFINITY,
                (Dir::Down, Sign::Minus) => f64::NEG_INFINITY,
                (_, Sign::Plus) => f64::MAX,
                _ => -f64::MAX,
            };
        }
        // exact: the value is representable and every partial product is normal
        let mut x = mant;
        let mut k = r.e;
        while k != 0 {
            let step = k.clamp(-1000, 1000);
            k -= step;
            x *= 2f64.powi(step as i32);
        }
        x
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Dyadic) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Dyadic) -> Ordering {
        let (sa, sb) = (self.m.sign(), other.m.sign());
        if sa != sb || sa == Sign::NoSign {
            return sa.cmp(&sb);
        }
        // same nonzero sign: compare magnitudes by leading bit first
        let ta = self.e + self.m.bits() as i64;
        let tb = other.e + other.m.bits() as i64;
        let mag = if ta != tb {
            ta.cmp(&tb)
        } else {
            let (a, b, _) = self.aligned(other);
            a.abs().cmp(&b.abs())
        };
        if sa == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }
}

/// Interval with dyadic endpoints at `prec` significand bits.
#[derive(Clone, PartialEq, Eq)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
    prec: u32,
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]@{}", self.lo_f64(), self.hi_f64(), self.prec)
    }
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic, prec: u32) -> DyadicInterval {
        assert!(lo <= hi, "empty interval");
        DyadicInterval { lo: lo.round(prec, Dir::Down), hi: hi.round(prec, Dir::Up), prec }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    /// Whether the exact rational `num/den` lies inside.
    pub fn contains_ratio(&self, num: &BigInt, den: &BigInt) -> bool {
        let le = |d: &Dyadic, upper: bool| {
            // compare d with num/den exactly: d.m·2^e·den vs num
            let (l, r) =
                if d.e >= 0 { ((&d.m << d.e as u64) * den, num.clone()) } else { (&d.m * den, num << (-d.e) as u64) };
            if upper {
                r <= l
            } else {
                l <= r
            }
        };
        le(&self.lo, false) && le(&self.hi, true)
    }
}

thread_local! {
    static LN2_CACHE: RefCell<HashMap<u32, DyadicInterval>> = RefCell::new(HashMap::new());
}

impl Kernel for DyadicInterval {
    type Ctx = u32;

    fn bits(prec: u32) -> u32 {
        prec
    }

    fn ctx(&self) -> u32 {
        self.prec
    }

    fn ratio(prec: u32, num: i64, den: i64) -> DyadicInterval {
        DyadicInterval {
            lo: Dyadic::ratio_dir(num, den, prec, Dir::Down),
            hi: Dyadic::ratio_dir(num, den, prec, Dir::Up),
            prec,
        }
    }

    fn from_f64(prec: u32, x: f64) -> DyadicInterval {
        let d = Dyadic::from_f64(x);
        DyadicInterval { lo: d.clone().round(prec, Dir::Down), hi: d.round(prec, Dir::Up), prec }
    }

    fn add(&self, o: &DyadicInterval) -> DyadicInterval {
        DyadicInterval {
            lo: self.lo.add_exact(&o.lo).round(self.prec, Dir::Down),
            hi: self.hi.add_exact(&o.hi).round(self.prec, Dir::Up),
            prec: self.prec,
        }
    }

    fn sub(&self, o: &DyadicInterval) -> DyadicInterval {
        self.add(&o.neg())
    }

    fn mul(&self, o: &DyadicInterval) -> DyadicInterval {
        let c =
            [self.lo.mul_exact(&o.lo), self.lo.mul_exact(&o.hi), self.hi.mul_exact(&o.lo), self.hi.mul_exact(&o.hi)];
        let lo = c.iter().min().expect("four").clone();
        let hi = c.iter().max().expect("four").clone();
        DyadicInterval { lo: lo.round(self.prec, Dir::Down), hi: hi.round(self.prec, Dir::Up), prec: self.prec }
    }

    fn div(&self, o: &DyadicInterval) -> Result<DyadicInterval, CertError> {
        if !(o.lo.is_positive() || o.hi.is_negative()) {
            return Err(CertError::Domain(format!("division by {o:?}")));
        }
        let p = self.prec;
        let pairs = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let lo = pairs.iter().map(|(a, b)| a.div_dir(b, p, Dir::Down)).min().expect("four");
        let hi = pairs.iter().map(|(a, b)| a.div_dir(b, p, Dir::Up)).max().expect("four");
        Ok(DyadicInterval { lo, hi, prec: p })
    }

    fn neg(&self) -> DyadicInterval {
        DyadicInterval { lo: self.hi.neg(), hi: self.lo.neg(), prec: self.prec }
    }

    fn scale2(&self, k: i64) -> DyadicInterval {
        DyadicInterval {
            lo: Dyadic { m: self.lo.m.clone(), e: self.lo.e + k },
            hi: Dyadic { m: self.hi.m.clone(), e: self.hi.e + k },
            prec: self.prec,
        }
    }

    fn lo_f64(&self) -> f64 {
        self.lo.to_f64_dir(Dir::Down)
    }

    fn hi_f64(&self) -> f64 {
        self.hi.to_f64_dir(Dir::Up)
    }

    fn lo_point(&self) -> DyadicInterval {
        DyadicInterval { lo: self.lo.clone(), hi: self.lo.clone(), prec: self.prec }
    }

    fn hi_point(&self) -> DyadicInterval {
        DyadicInterval { lo: self.hi.clone(), hi: self.hi.clone(), prec: self.prec }
    }

    fn span(lo: &DyadicInterval, hi: &DyadicInterval) -> DyadicInterval {
        DyadicInterval::new(lo.lo.clone(), hi.hi.clone(), lo.prec)
    }

    fn min(&self, o: &DyadicInterval) -> DyadicInterval {
        DyadicInterval { lo: self.lo.clone().min(o.lo.clone()), hi: self.hi.clone().min(o.hi.clone()), prec: self.prec }
    }

    fn max(&self, o: &DyadicInterval) -> DyadicInterval {
        DyadicInterval { lo: self.lo.clone().max(o.lo.clone()), hi: self.hi.clone().max(o.hi.clone()), prec: self.prec }
    }

    fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    fn certainly_lt(&self, o: &DyadicInterval) -> bool {
        self.hi < o.lo
    }

    fn widen_abs(&self, r: f64) -> DyadicInterval {
        let r = Dyadic::from_f64(r);
        DyadicInterval {
            lo: self.lo.add_exact(&r.neg()).round(self.prec, Dir::Down),
            hi: self.hi.add_exact(&r).round(self.prec, Dir::Up),
            prec: self.prec,
        }
    }

    fn ln2(prec: u32) -> DyadicInterval {
        if let Some(v) = LN2_CACHE.with(|c| c.borrow().get(&prec).cloned()) {
            return v;
        }
        let v: DyadicInterval = ln2_series(prec);
        LN2_CACHE.with(|c| c.borrow_mut().insert(prec, v.clone()));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::super::kernel::{exp, ln, Enclosure};
    use super::*;

    #[test]
    fn shift_rounds_toward_negative_infinity() {
        assert_eq!(BigInt::from(-5) >> 1u32, BigInt::from(-3));
        assert_eq!(Dyadic::shr_dir(&BigInt::from(-5), 1, Dir::Up), BigInt::from(-2));
        assert_eq!(Dyadic::shr_dir(&BigInt::from(5), 1, Dir::Up), BigInt::from(3));
    }

    #[test]
    fn f64_roundtrip() {
        for &x in &[1.0, -2.5, 0.1, 1e-310, -1e300, 5e-324] {
            let d = Dyadic::from_f64(x);
            assert_eq!(d.to_f64_dir(Dir::Down), x);
            assert_eq!(d.to_f64_dir(Dir::Up), x);
        }
    }

    #[test]
    fn ratio_encloses() {
        let third = DyadicInterval::ratio(128, 1, 3);
        assert!(third.contains_ratio(&BigInt::from(1), &BigInt::from(3)));
        assert!(third.lo < third.hi);
        let exact = DyadicInterval::ratio(128, 3, 4);
        assert_eq!(exact.lo, exact.hi);
    }

    #[test]
    fn ln2_agrees_with_f64() {
        let d = DyadicInterval::ln2(256);
        let e = Enclosure::ln2(());
        assert!(e.lo() <= d.lo_f64() && d.hi_f64() <= e.hi());
        assert!(d.hi_f64() - d.lo_f64() <= f64::EPSILON);
    }

    #[test]
    fn transcendentals_nest() {
        for &(n, dn) in &[(1i64, 7i64), (-3, 2), (25, 1), (-400, 3)] {
            let x = n as f64 / dn as f64;
            let d = exp(&DyadicInterval::ratio(128, n, dn)).unwrap();
            let f = exp(&Enclosure::ratio((), n, dn)).unwrap();
            assert!(f.lo() <= d.lo_f64() && d.hi_f64() <= f.hi(), "exp({x}): {d:?} vs {f:?}");
        }
        for &(n, dn) in &[(1i64, 7i64), (3, 2), (25, 1), (1, 400000)] {
            let d = ln(&DyadicInterval::ratio(128, n, dn)).unwrap();
            let f = ln(&Enclosure::ratio((), n, dn)).unwrap();
            assert!(f.lo() <= d.lo_f64() && d.hi_f64() <= f.hi(), "ln: {d:?} vs {f:?}");
        }
    }
}
