//! Floating-point saddle-point heuristics for the growth rate of the expected
//! number of independent `k`-sets with `t` extensions, with `k ≈ κn` and
//! `t ≈ τn`.
//!
//! Everything here is plain `f64`. Rigorous versions of the same inequalities
//! live in [`crate::certifier`].

use std::f64::consts::LN_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AsymptoticsError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("no bisection bracket found for target {0}")]
    NoBracket(f64),
    #[error("threshold search found {0} sign changes in the coarse scan, expected exactly one")]
    Crossings(usize),
}

type Result<T> = std::result::Result<T, AsymptoticsError>;

/// Which side of the sequence a ratio refers to: the increasing head
/// (`τ ≤ κ`) or the decreasing tail (`τ ≥ κ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Head,
    Tail,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Head => "head",
            Regime::Tail => "tail",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "head" => Ok(Regime::Head),
            "tail" => Ok(Regime::Tail),
            other => Err(format!("unknown regime {other:?}, expected head or tail")),
        }
    }
}

/// Binary entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(AsymptoticsError::Domain(format!("entropy argument {x} not in [0,1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-(x * x.log2() + (1.0 - x) * (1.0 - x).log2()))
}

fn entropy_unchecked(x: f64) -> f64 {
    binary_entropy(x).unwrap_or(f64::NAN)
}

/// Root of `g(x) = target` for a continuous strictly increasing `g` on
/// `[0, ∞)` with `g(0) <= target`. Bisects until the midpoint is no longer
/// representable strictly between the bracket ends.
pub fn bisect_increasing(g: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    if !target.is_finite() || g(0.0) > target {
        return Err(AsymptoticsError::NoBracket(target));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while g(hi) < target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1000 || !hi.is_finite() {
            return Err(AsymptoticsError::NoBracket(target));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick whichever end has the smaller residual
    Ok(if (g(lo) - target).abs() <= (g(hi) - target).abs() { lo } else { hi })
}

/// `ρ f'(ρ) / f(ρ)` for `f(z) = 1 + (e^z - 1)/κ`.
pub fn saddle_map(kappa: f64, rho: f64) -> f64 {
    rho / (1.0 + (kappa - 1.0) * (-rho).exp())
}

/// The root of `ρ e^ρ = 1`, the limiting independence ratio constant of a
/// uniform random tree.
pub fn pittel_constant() -> f64 {
    bisect_increasing(|r| r * r.exp(), 1.0).expect("bracket exists")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddlePoint {
    pub kappa: f64,
    pub tau: f64,
    pub rho: f64,
    pub sigma_sq: f64,
}

impl SaddlePoint {
    pub fn target(&self) -> f64 {
        self.kappa / (1.0 - self.kappa - self.tau)
    }

    pub fn residual(&self) -> f64 {
        (saddle_map(self.kappa, self.rho) - self.target()).abs()
    }

    /// `ln f(ρ)`, evaluated without overflow for large `ρ`.
    pub fn ln_f(&self) -> f64 {
        self.rho - self.kappa.ln() + ((self.kappa - 1.0) * (-self.rho).exp()).ln_1p()
    }
}

fn check_kappa_tau(kappa: f64, tau: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa < 1.0 && tau >= 0.0 && kappa + tau < 1.0) {
        return Err(AsymptoticsError::Domain(format!(
            "need 0 < kappa < 1, tau >= 0, kappa + tau < 1; got kappa={kappa}, tau={tau}"
        )));
    }
    Ok(())
}

/// `σ² = ρ²(f''/f − (f'/f)² + f'/(ρf))` for `f(z) = 1 + (e^z − 1)/κ`.
pub fn sigma_sq(kappa: f64, rho: f64) -> f64 {
    // with w = (1-κ)e^{-ρ} and u = f'/f = 1/(1-w):
    // σ² = ρu(1 + ρ(1-u)) = ρu(1 - ρw/(1-w))
    let w = (1.0 - kappa) * (-rho).exp();
    let u = 1.0 / (1.0 - w);
    rho * u * (1.0 - rho * w / (1.0 - w))
}

pub fn solve_rho(kappa: f64, tau: f64) -> Result<SaddlePoint> {
    check_kappa_tau(kappa, tau)?;
    let target = kappa / (1.0 - kappa - tau);
    let rho = bisect_increasing(|r| saddle_map(kappa, r), target)?;
    if rho <= 0.0 {
        return Err(AsymptoticsError::NoBracket(target));
    }
    Ok(SaddlePoint { kappa, tau, rho, sigma_sq: sigma_sq(kappa, rho) })
}

/// Natural log of `C(κ,τ)`.
pub fn ln_growth_rate(kappa: f64, tau: f64) -> Result<f64> {
    let sp = solve_rho(kappa, tau)?;
    let bits = entropy_unchecked(kappa) + (1.0 - kappa) * binary_entropy(tau / (1.0 - kappa))?;
    Ok(LN_2 * bits + tau * (1.0 - kappa).ln() + (1.0 - tau) * kappa.ln() + (1.0 - kappa - tau) * sp.ln_f()
        - kappa
        - kappa * sp.rho.ln())
}

/// Exponential growth rate `C(κ,τ)` of the expected number of independent
/// `κn`-sets with `τn` extensions.
pub fn growth_rate_c(kappa: f64, tau: f64) -> Result<f64> {
    ln_growth_rate(kappa, tau).map(f64::exp)
}

/// `ln` of the normaliser `2^{(1−κ)H(κ/(1−κ))}`, the growth rate of the
/// lower bound on the number of sets with many extensions.
pub fn ln_normaliser(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 0.5) {
        return Err(AsymptoticsError::Domain(format!("need 0 < kappa <= 1/2; got {kappa}")));
    }
    Ok(LN_2 * (1.0 - kappa) * binary_entropy(kappa / (1.0 - kappa))?)
}

/// `C(κ,τ) / 2^{(1−κ)H(κ/(1−κ))}` at a single point.
pub fn point_ratio(kappa: f64, tau: f64) -> Result<f64> {
    Ok((ln_growth_rate(kappa, tau)? - ln_normaliser(kappa)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub kappa: f64,
    pub tau_star: f64,
    pub ratio: f64,
}

/// Range of `τ` for a regime. The tail range is open at `1 − κ`.
pub fn tau_range(regime: Regime, kappa: f64) -> (f64, f64) {
    match regime {
        Regime::Head => (0.0, kappa),
        Regime::Tail => (kappa, 1.0 - kappa),
    }
}

const TAU_GRID: f64 = 1e-3;
const GOLDEN_TOL: f64 = 1e-8;

fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > GOLDEN_TOL {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    if gc >= gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// `sup_τ C(κ,τ) / 2^{(1−κ)H(κ/(1−κ))}` over the regime's `τ` range: a
/// 10⁻³ grid, then golden-section refinement around every grid-local maximum.
pub fn sup_ratio(regime: Regime, kappa: f64) -> Result<RatioPoint> {
    let norm = ln_normaliser(kappa)?;
    let (lo, hi) = tau_range(regime, kappa);
    // keep the open end of the tail range away from the pole
    let hi = if regime == Regime::Tail { hi - 1e-9 } else { hi };
    let steps = (((hi - lo) / TAU_GRID).ceil() as usize).max(1);
    let taus: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let g = |tau: f64| ln_growth_rate(kappa, tau.clamp(lo, hi)).unwrap_or(f64::NEG_INFINITY);
    let vals: Vec<f64> = taus.iter().map(|&t| g(t)).collect();
    if vals.iter().all(|v| !v.is_finite()) {
        return Err(AsymptoticsError::Domain(format!("no finite C values at kappa={kappa}")));
    }
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for i in 0..vals.len() {
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < vals.len() { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] < left || vals[i] < right {
            continue;
        }
        let a = taus[i.saturating_sub(1)];
        let b = taus[(i + 1).min(taus.len() - 1)];
        let (t, v) = golden_max(&g, a, b);
        let (t, v) = if v >= vals[i] { (t, v) } else { (taus[i], vals[i]) };
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(RatioPoint { kappa, tau_star: best.0, ratio: (best.1 - norm).exp() })
}

/// A threshold located to grid resolution: `pass` satisfies the inequality
/// and the adjacent grid point `fail` does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBracket {
    pub regime: Regime,
    pub resolution: f64,
    pub pass: f64,
    pub fail: f64,
}

fn passes(regime: Regime, kappa: f64) -> Result<bool> {
    Ok(sup_ratio(regime, kappa)?.ratio < 1.0)
}

/// Coarse scan range for each regime. The head inequality holds for small κ
/// and fails above the threshold; the tail is the other way round.
fn scan_range(regime: Regime) -> (f64, f64) {
    match regime {
        Regime::Head => (0.05, 0.45),
        Regime::Tail => (0.2, 0.49),
    }
}

/// Locates the head (largest passing κ) or tail (smallest passing κ)
/// threshold on the grid `κ = j·resolution`.
pub fn heuristic_threshold(regime: Regime, resolution: f64) -> Result<ThresholdBracket> {
    if !(resolution > 0.0 && resolution <= 0.01) {
        return Err(AsymptoticsError::Domain(format!("resolution {resolution} not in (0, 0.01]")));
    }
    let (a, b) = scan_range(regime);
    let coarse = 0.01;
    let n = ((b - a) / coarse).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| a + coarse * i as f64).collect();
    let flags = grid.iter().map(|&k| passes(regime, k)).collect::<Result<Vec<_>>>()?;
    let changes: Vec<usize> = (1..flags.len()).filter(|&i| flags[i] != flags[i - 1]).collect();
    let expected_first = regime == Regime::Head;
    if changes.len() != 1 || flags[0] != expected_first {
        return Err(AsymptoticsError::Crossings(changes.len()));
    }
    let i = changes[0];
    // grid indices j with κ = j·resolution; invariant: passes at one end, fails at the other
    let idx = |k: f64| (k / resolution).round() as i64;
    let at = |j: i64| j as f64 * resolution;
    let (mut lo, mut hi) = (idx(grid[i - 1]), idx(grid[i]));
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if passes(regime, at(mid))? == expected_first {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (pass, fail) = match regime {
        Regime::Head => (at(lo), at(hi)),
        Regime::Tail => (at(hi), at(lo)),
    };
    Ok(ThresholdBracket { regime, resolution, pass, fail })
}

pub fn heuristic_head_threshold(resolution: f64) -> Result<ThresholdBracket> {
    heuristic_threshold(Regime::Head, resolution)
}

pub fn heuristic_tail_threshold(resolution: f64) -> Result<ThresholdBracket> {
    heuristic_threshold(Regime::Tail, resolution)
}

/// `sup_ratio` at each κ in `kappas`.
pub fn ratio_table(regime: Regime, kappas: &[f64]) -> Result<Vec<RatioPoint>> {
    kappas.iter().map(|&k| sup_ratio(regime, k)).collect()
}

/// Writes `kappa,tau_star,ratio` rows with a header line.
pub fn write_csv(mut out: impl Write, rows: &[RatioPoint]) -> std::io::Result<()> {
    writeln!(out, "kappa,tau_star,ratio")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.kappa, r.tau_star, r.ratio)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-13);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn pittel() {
        let r = pittel_constant();
        assert!((r - 0.567_143_290_409_784).abs() < 1e-14);
        assert!((r * r.exp() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rho_residual_grid() {
        for i in 0..100 {
            let kappa = (i as f64 + 0.5) / 100.0;
            let mut prev = 0.0;
            for j in 0..100 {
                let tau = j as f64 / 100.0;
                if kappa + tau >= 1.0 {
                    break;
                }
                let sp = solve_rho(kappa, tau).unwrap();
                assert!(sp.residual() <= 1e-12, "kappa={kappa} tau={tau} res={}", sp.residual());
                assert!(sp.sigma_sq > 0.0);
                assert!(sp.rho > prev);
                prev = sp.rho;
            }
        }
    }

    #[test]
    fn rho_domain_errors() {
        assert!(solve_rho(0.0, 0.1).is_err());
        assert!(solve_rho(0.5, 0.5).is_err());
        assert!(solve_rho(0.3, -0.1).is_err());
    }

    #[test]
    fn c_is_positive_and_finite() {
        for i in 1..50 {
            let kappa = i as f64 / 100.0;
            for j in 0..100 {
                let tau = j as f64 / 100.0;
                if kappa + tau >= 1.0 {
                    break;
                }
                let c = growth_rate_c(kappa, tau).unwrap();
                assert!(c.is_finite() && c > 0.0);
            }
        }
    }

    #[test]
    fn head_ratio_near_threshold() {
        assert!(sup_ratio(Regime::Head, 0.28098).unwrap().ratio < 1.0);
        assert!(sup_ratio(Regime::Head, 0.28099).unwrap().ratio >= 1.0);
        assert!(sup_ratio(Regime::Tail, 0.34667).unwrap().ratio < 1.0);
        assert!(sup_ratio(Regime::Tail, 0.34666).unwrap().ratio >= 1.0);
    }

    #[test]
    fn regime_parse() {
        assert_eq!("head".parse::<Regime>().unwrap(), Regime::Head);
        assert!("middle".parse::<Regime>().is_err());
        assert_eq!(serde_json::to_string(&Regime::Tail).unwrap(), "\"tail\"");
    }

    #[test]
    fn csv_shape() {
        let rows = ratio_table(Regime::Head, &[0.1, 0.2]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("kappa,tau_star,ratio\n0.1,"));
    }
}
