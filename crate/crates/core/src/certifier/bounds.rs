//! Per-cell growth constants. Every factor is carried as the enclosure of
//! its natural logarithm; the ratio is exponentiated once at the end.

use super::kernel::{entropy_inf, entropy_sup, exp, ln, Frac, Kernel};
use super::{CertError, GridCell, Route};
use crate::asymptotics::{bisect_increasing, Regime};

fn fr(num: u64, den: u64) -> Frac {
    Frac::new(num as i64, den as i64)
}

fn rat<K: Kernel>(ctx: K::Ctx, num: u64, den: u64) -> K {
    K::ratio(ctx, num as i64, den as i64)
}

/// Quantities that depend only on `(M, p)`.
#[derive(Debug, Clone)]
pub struct PContext<K: Kernel> {
    pub ctx: K::Ctx,
    pub m: u64,
    pub p: u64,
    pub regime: Regime,
    pub ln_a: K,
    pub ln_h: K,
    pub ln_i: K,
    ln_p_over_m: K,
    ln_one_minus: K,
}

impl<K: Kernel> PContext<K> {
    pub fn new(ctx: K::Ctx, m: u64, p: u64, regime: Regime) -> Result<PContext<K>, CertError> {
        if p < 2 || p + 1 >= m {
            return Err(CertError::Domain(format!("need 2 <= p and p + 1 < M; got p={p}, M={m}")));
        }
        let ln2 = K::ln2(ctx);
        let ln_a = entropy_sup::<K>(ctx, fr(p - 1, m), fr(p, m))?.mul(&ln2);
        let ln_i = entropy_inf::<K>(ctx, fr(p - 1, m - p + 2), fr(p + 1, m - p))?.mul(&rat(ctx, m - p, m)).mul(&ln2);
        let ln_p_over_m = ln(&rat::<K>(ctx, p, m))?;
        let ln_h = ln_p_over_m.sub(&K::int(ctx, 1)).mul(&rat(ctx, p - 1, m));
        let ln_one_minus = ln(&rat::<K>(ctx, m - p + 1, m))?;
        Ok(PContext { ctx, m, p, regime, ln_a, ln_h, ln_i, ln_p_over_m, ln_one_minus })
    }

    /// Admissible `q` for this regime.
    pub fn q_range(&self) -> std::ops::RangeInclusive<u64> {
        q_range(self.regime, self.m, self.p)
    }

    pub fn ln_b(&self, q: u64) -> Result<K, CertError> {
        let (m, p) = (self.m, self.p);
        let h = entropy_sup::<K>(self.ctx, fr(q - 1, m - p + 1), fr(q, m - p))?;
        Ok(h.mul(&rat(self.ctx, m - p + 1, m)).mul(&K::ln2(self.ctx)))
    }

    pub fn ln_c(&self, q: u64) -> K {
        self.ln_one_minus.mul(&rat(self.ctx, q - 1, self.m))
    }

    /// `None` when the base `1 - (p+q-2)/M` is not positive.
    pub fn ln_d(&self, q: u64) -> Result<Option<K>, CertError> {
        let (m, p) = (self.m, self.p);
        if p + q - 2 >= m {
            return Ok(None);
        }
        Ok(Some(ln(&rat::<K>(self.ctx, m + 2 - p - q, m))?.mul(&rat(self.ctx, p - 1, m))))
    }

    fn require_good(&self, q: u64) -> Result<(), CertError> {
        if self.p + q >= self.m {
            return Err(CertError::Domain(format!("need p + q < M; got p={}, q={q}, M={}", self.p, self.m)));
        }
        Ok(())
    }

    pub fn ln_e(&self, q: u64) -> Result<K, CertError> {
        self.require_good(q)?;
        Ok(self.ln_p_over_m.mul(&rat(self.ctx, self.m - self.p - q, self.m)))
    }

    pub fn ln_f(&self, q: u64) -> Result<K, CertError> {
        self.require_good(q)?;
        Ok(ln(&rat::<K>(self.ctx, self.m - self.p - q, self.m))?.mul(&rat(self.ctx, self.p, self.m)))
    }

    /// `s(ρ) = ρ / (1 - (1 - (p-1)/M) e^{-ρ})`, increasing in `ρ`.
    pub fn s_map(&self, rho: &K) -> Result<K, CertError> {
        let c = rat::<K>(self.ctx, self.m - self.p + 1, self.m);
        let den = K::int(self.ctx, 1).sub(&c.mul(&exp(&rho.neg())?));
        rho.div(&den)
    }

    fn s_f64(&self, rho: f64) -> f64 {
        let c = (self.m - self.p + 1) as f64 / self.m as f64;
        rho / (1.0 - c * (-rho).exp())
    }

    fn s_prime_f64(&self, rho: f64) -> f64 {
        let c = (self.m - self.p + 1) as f64 / self.m as f64;
        let w = c * (-rho).exp();
        (1.0 - w - rho * w) / ((1.0 - w) * (1.0 - w))
    }

    /// Certified enclosure of the root of `s(ρ) = num/den`.
    pub fn rho_root(&self, num: u64, den: u64) -> Result<K, CertError> {
        let ctx = self.ctx;
        let target = rat::<K>(ctx, num, den);
        let t = num as f64 / den as f64;
        let below = |x: &K| -> Result<bool, CertError> { Ok(self.s_map(x)?.certainly_lt(&target)) };
        let above = |x: &K| -> Result<bool, CertError> { Ok(target.certainly_lt(&self.s_map(x)?)) };
        let seed = bisect_increasing(|r| self.s_f64(r), t)
            .map_err(|e| CertError::NoBracket(format!("float seed for s(rho)={t}: {e}")))?;
        if seed > 0.0 {
            // Newton on kernel midpoints; the derivative only steers
            let bits = K::bits(ctx);
            let mut x = K::from_f64(ctx, seed);
            if bits > 53 {
                for _ in 0..12 {
                    let v = self.s_map(&x)?.sub(&target).mid_f64();
                    let dx = v / self.s_prime_f64(x.mid_f64());
                    if !dx.is_finite() {
                        break;
                    }
                    x = x.sub(&K::from_f64(ctx, dx)).lo_point();
                    if dx.abs() <= x.mid_f64().abs() * (-(bits as f64)).exp2() {
                        break;
                    }
                }
            }
            let mut delta = x.mid_f64().abs() * (6.0 - bits as f64).exp2();
            for _ in 0..8 {
                let a = x.widen_abs(delta).lo_point();
                let b = x.widen_abs(delta).hi_point();
                if a.lo_f64() > 0.0 && below(&a)? && above(&b)? {
                    return Ok(K::span(&a, &b));
                }
                delta *= 256.0;
            }
        }
        self.rho_bisect(&target)
    }

    fn rho_bisect(&self, target: &K) -> Result<K, CertError> {
        let ctx = self.ctx;
        let mut lo = K::int(ctx, 0);
        let mut hi = K::int(ctx, 1);
        let mut doublings = 0;
        while !target.certainly_lt(&self.s_map(&hi)?) {
            lo = hi.clone();
            hi = hi.scale2(1);
            doublings += 1;
            if doublings > 64 {
                return Err(CertError::NoBracket(format!("s(rho) = {target:?}")));
            }
        }
        for _ in 0..K::bits(ctx) + 64 {
            let mid = lo.add(&hi).scale2(-1).lo_point();
            let v = self.s_map(&mid)?;
            if v.certainly_lt(target) {
                lo = mid;
            } else if target.certainly_lt(&v) {
                hi = mid;
            } else {
                break;
            }
        }
        Ok(K::span(&lo, &hi))
    }

    /// `(ρ_min, ρ_max)`: roots of `s(ρ) = (p-1)/(M-p-q+2)` and `s(ρ) = p/(M-p-q)`.
    pub fn rho_interval(&self, q: u64) -> Result<(K, K), CertError> {
        self.require_good(q)?;
        let (m, p) = (self.m, self.p);
        let rho_min = self.rho_root(p - 1, m + 2 - p - q)?;
        let rho_max = self.rho_root(p, m - p - q)?;
        Ok((rho_min, rho_max))
    }

    /// `ln(1 + (M/(p-1))(e^ρ - 1)) = ρ + ln(c - (c-1)e^{-ρ})`, increasing in `ρ`.
    fn ln_g_base(&self, rho: &K) -> Result<K, CertError> {
        let c = rat::<K>(self.ctx, self.m, self.p - 1);
        let inner = c.sub(&c.sub(&K::int(self.ctx, 1)).mul(&exp(&rho.neg())?));
        Ok(rho.add(&ln(&inner)?))
    }

    pub fn ln_g(&self, q: u64, rho_min: &K, rho_max: &K) -> Result<K, CertError> {
        let (m, p) = (self.m, self.p);
        let lo = self.ln_g_base(&rho_max.lo_point())?;
        let hi = self.ln_g_base(&rho_max.hi_point())?;
        let num = K::span(&lo, &hi).mul(&rat(self.ctx, m + 2 - p - q, m));
        let l = ln(rho_min)?;
        let den = match self.regime {
            Regime::Head => l.mul(&rat(self.ctx, p, m)),
            // the exponent of ρ_min ranges over [(p-1)/M, p/M]
            Regime::Tail => l.mul(&rat(self.ctx, p, m)).min(&l.mul(&rat(self.ctx, p - 1, m))),
        };
        Ok(num.sub(&den))
    }

    /// Lower bound of `σ²` over `[ρ_min, ρ_max]` must be positive.
    pub fn sigma_gate(&self, rho_min: &K, rho_max: &K) -> Result<(), CertError> {
        let hull = K::span(rho_min, rho_max);
        let mut pending = vec![(hull, 0u32)];
        while let Some((piece, depth)) = pending.pop() {
            if self.sigma_sq(&piece)?.is_positive() {
                continue;
            }
            if depth >= 10 {
                return Err(CertError::Domain(format!("sigma^2 not certified positive on {piece:?}")));
            }
            let mid = piece.lo_point().add(&piece.hi_point()).scale2(-1).lo_point();
            pending.push((K::span(&piece, &mid), depth + 1));
            pending.push((K::span(&mid, &piece), depth + 1));
        }
        Ok(())
    }

    /// `σ² = ρu(1 − ρw/(1−w))` with `w = (1 − (p−1)/M)e^{−ρ}` and `u = 1/(1−w)`.
    pub fn sigma_sq(&self, rho: &K) -> Result<K, CertError> {
        let one = K::int(self.ctx, 1);
        let w = rat::<K>(self.ctx, self.m - self.p + 1, self.m).mul(&exp(&rho.neg())?);
        let one_minus_w = one.sub(&w);
        let u = one.div(&one_minus_w)?;
        let inner = one.sub(&rho.mul(&w).div(&one_minus_w)?);
        Ok(rho.mul(&u).mul(&inner))
    }

    /// Enclosure of the cell ratio and the route that produced it.
    pub fn eval_q(&self, q: u64) -> Result<(K, Route), CertError> {
        let Some(ln_d) = self.ln_d(q)? else {
            return Ok((K::int(self.ctx, 0), Route::Zero));
        };
        let base = self.ln_a.add(&self.ln_b(q)?).add(&self.ln_c(q)).add(&ln_d);
        let crude = base.sub(&self.ln_i);
        let good_possible = self.p + q < self.m;
        if !good_possible {
            return match self.regime {
                Regime::Tail => Ok((exp(&crude)?, Route::Crude)),
                Regime::Head => Err(CertError::Domain(format!("head cell needs p + q < M; p={}, q={q}", self.p))),
            };
        }
        let good = self.ln_good(q, &base);
        match (self.regime, good) {
            (Regime::Head, good) => Ok((exp(&good?)?, Route::Good)),
            (Regime::Tail, Ok(good)) => {
                if good.certainly_lt(&crude) {
                    Ok((exp(&good)?, Route::Good))
                } else if crude.certainly_lt(&good) {
                    Ok((exp(&crude)?, Route::Crude))
                } else {
                    Ok((exp(&good.min(&crude))?, Route::Good))
                }
            }
            (Regime::Tail, Err(_)) => Ok((exp(&crude)?, Route::Crude)),
        }
    }

    fn ln_good(&self, q: u64, base: &K) -> Result<K, CertError> {
        let (rho_min, rho_max) = self.rho_interval(q)?;
        self.sigma_gate(&rho_min, &rho_max)?;
        let ln_g = self.ln_g(q, &rho_min, &rho_max)?;
        Ok(base.add(&self.ln_e(q)?).add(&ln_g).add(&self.ln_h).sub(&self.ln_f(q)?).sub(&self.ln_i))
    }
}

/// Admissible `q` for a regime: head `1..=p+1`, tail `p..=M-p+2`.
pub fn q_range(regime: Regime, m: u64, p: u64) -> std::ops::RangeInclusive<u64> {
    match regime {
        Regime::Head => 1..=(p + 1).min(m.saturating_sub(p + 1)),
        Regime::Tail => p..=(m + 2).saturating_sub(p),
    }
}

/// Validates a cell against its regime's index constraints.
pub fn validate(cell: &GridCell) -> Result<(), CertError> {
    let GridCell { m, p, q, regime } = *cell;
    let ok = p >= 2 && p + 1 < m && q_range(regime, m, p).contains(&q) && (regime == Regime::Tail || p + q < m);
    if ok {
        Ok(())
    } else {
        Err(CertError::Domain(format!("cell {cell} outside the {regime} regime")))
    }
}

fn exp_of<K: Kernel>(x: Result<K, CertError>) -> Result<K, CertError> {
    exp(&x?)
}

/// `A(p, M)` as an enclosure.
pub fn bound_a<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    exp(&PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_a)
}

pub fn bound_b<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    exp_of(PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_b(cell.q))
}

pub fn bound_c<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    exp(&PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_c(cell.q))
}

pub fn bound_d<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    match PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_d(cell.q)? {
        Some(l) => exp(&l),
        None => Ok(K::int(ctx, 0)),
    }
}

pub fn bound_e<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    exp_of(PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_e(cell.q))
}

pub fn bound_f<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    exp_of(PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_f(cell.q))
}

pub fn bound_g<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    let pc = PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?;
    let (lo, hi) = pc.rho_interval(cell.q)?;
    exp_of(pc.ln_g(cell.q, &lo, &hi))
}

pub fn bound_h<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    exp(&PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_h)
}

pub fn bound_i<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<K, CertError> {
    exp(&PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.ln_i)
}

pub fn rho_interval<K: Kernel>(ctx: K::Ctx, cell: &GridCell) -> Result<(K, K), CertError> {
    PContext::<K>::new(ctx, cell.m, cell.p, cell.regime)?.rho_interval(cell.q)
}
