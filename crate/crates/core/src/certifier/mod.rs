//! Rigorous verification of the grid inequality behind the heuristic
//! thresholds.
//!
//! For a grid of size `M`, `k/n` is placed in the interval indexed by `p`
//! and `t/n` in the one indexed by `q`. Each cell gets an outward-rounded
//! enclosure of the product of growth constants `ABCDEGH/(F·I)`; a value of
//! `p` is verified when every admissible `q` has an upper bound below
//! `1 - margin`. The margin stands in for the `ε` of the asymptotic bound, so
//! a certificate establishes an asymptotic statement, not an effective
//! finite-`n` one.
//!
//! Cells are evaluated with the `f64` [`Enclosure`] kernel and re-evaluated
//! with [`DyadicInterval`] at 128 and then 256 bits when the verdict is
//! undecided.

pub mod bounds;
pub mod certificate;
pub mod dyadic;
pub mod hexfloat;
pub mod kernel;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::asymptotics::Regime;
pub use bounds::{
    bound_a, bound_b, bound_c, bound_d, bound_e, bound_f, bound_g, bound_h, bound_i, q_range, rho_interval, PContext,
};
pub use certificate::{Certificate, ReplayMode, ReplayReport};
pub use dyadic::{Dyadic, DyadicInterval};
pub use kernel::{Enclosure, Kernel};

#[derive(Debug, thiserror::Error)]
pub enum CertError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("root bracket not found: {0}")]
    NoBracket(String),
    #[error("bootstrap chain broken: {0}")]
    Chain(String),
    #[error("malformed certificate: {0}")]
    Format(String),
    #[error("replay mismatch: {0}")]
    Replay(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Significand widths tried, in order, for undecided cells.
pub const ESCALATION_BITS: [u32; 2] = [128, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub m: u64,
    pub p: u64,
    pub q: u64,
    pub regime: Regime,
}

impl GridCell {
    pub fn new(regime: Regime, m: u64, p: u64, q: u64) -> Result<GridCell, CertError> {
        let cell = GridCell { m, p, q, regime };
        bounds::validate(&cell)?;
        Ok(cell)
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(M={}, p={}, q={})", self.regime, self.m, self.p, self.q)
    }
}

/// Which bound produced a cell's enclosure. `Crude` drops the saddle-point
/// factors; `Zero` is a cell whose sets cannot exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Good,
    Crude,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: GridCell,
    #[serde(with = "hexfloat::serde_hex")]
    pub lo: f64,
    #[serde(with = "hexfloat::serde_hex")]
    pub hi: f64,
    /// Significand width of the kernel that produced the final enclosure.
    pub bits: u32,
    pub route: Option<Route>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `1 - margin`, the strict upper bound a cell ratio must stay under.
pub fn threshold(margin: f64) -> f64 {
    1.0 - margin
}

enum Outcome {
    Decided(CellResult),
    Undecided(CellResult),
}

fn judge<K: Kernel>(cell: GridCell, bits: u32, margin: f64, r: Result<(K, Route), CertError>) -> Outcome {
    let t = threshold(margin);
    match r {
        Ok((enc, route)) => {
            let (lo, hi) = (enc.lo_f64(), enc.hi_f64());
            let res = |pass| CellResult { cell, lo, hi, bits, route: Some(route), pass, error: None };
            if hi < t {
                Outcome::Decided(res(true))
            } else if lo >= t {
                Outcome::Decided(res(false))
            } else {
                Outcome::Undecided(res(false))
            }
        }
        Err(e) => Outcome::Undecided(CellResult {
            cell,
            lo: 0.0,
            hi: f64::INFINITY,
            bits,
            route: None,
            pass: false,
            error: Some(e.to_string()),
        }),
    }
}

/// Evaluates all cells of one `(M, p)` with cached per-`p` quantities.
pub struct PChecker {
    regime: Regime,
    m: u64,
    p: u64,
    base: Result<PContext<Enclosure>, String>,
    wide: HashMap<u32, Result<PContext<DyadicInterval>, String>>,
}

impl PChecker {
    pub fn new(regime: Regime, m: u64, p: u64) -> PChecker {
        PChecker {
            regime,
            m,
            p,
            base: PContext::new((), m, p, regime).map_err(|e| e.to_string()),
            wide: HashMap::new(),
        }
    }

    pub fn q_range(&self) -> std::ops::RangeInclusive<u64> {
        q_range(self.regime, self.m, self.p)
    }

    pub fn check(&mut self, q: u64, margin: f64) -> CellResult {
        let cell = GridCell { m: self.m, p: self.p, q, regime: self.regime };
        if let Err(e) = bounds::validate(&cell) {
            return CellResult {
                cell,
                lo: 0.0,
                hi: f64::INFINITY,
                bits: 53,
                route: None,
                pass: false,
                error: Some(e.to_string()),
            };
        }
        let first = match &self.base {
            Ok(pc) => pc.eval_q(q),
            Err(e) => Err(CertError::Domain(e.clone())),
        };
        let mut last = match judge(cell, 53, margin, first) {
            Outcome::Decided(r) => return r,
            Outcome::Undecided(r) => r,
        };
        for bits in ESCALATION_BITS {
            let (regime, m, p) = (self.regime, self.m, self.p);
            let pc =
                self.wide.entry(bits).or_insert_with(|| PContext::new(bits, m, p, regime).map_err(|e| e.to_string()));
            let r = match pc {
                Ok(pc) => pc.eval_q(q),
                Err(e) => Err(CertError::Domain(e.clone())),
            };
            match judge(cell, bits, margin, r) {
                Outcome::Decided(r) => return r,
                Outcome::Undecided(r) => last = r,
            }
        }
        last
    }
}

/// Verdict for one cell, escalating precision when the `f64` enclosure
/// straddles `1 - margin`. Domain failures count as failures.
pub fn check_cell(cell: &GridCell, margin: f64) -> CellResult {
    PChecker::new(cell.regime, cell.m, cell.p).check(cell.q, margin)
}

/// Summary of all cells of one `p` (or of a contiguous chunk of its `q`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRow {
    pub p: u64,
    /// The cell with the largest upper bound, or the first failing cell.
    pub worst: CellResult,
    pub pass: bool,
    /// Cells examined; for a failing row, up to and including the failure.
    pub cells_checked: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellResult>,
}

impl PRow {
    /// Combines the rows of two adjacent `q` chunks, `self` first.
    pub fn merge(self, right: PRow) -> PRow {
        assert_eq!(self.p, right.p);
        if !self.pass {
            return self;
        }
        let mut cells = self.cells;
        cells.extend(right.cells);
        let cells_checked = self.cells_checked + right.cells_checked;
        let worst = if !right.pass || right.worst.hi > self.worst.hi { right.worst } else { self.worst };
        PRow { p: self.p, worst, pass: right.pass, cells_checked, cells }
    }
}

/// Checks `q` in `qs` for one `p`, stopping at the first failure.
pub fn check_p_chunk(
    regime: Regime,
    m: u64,
    p: u64,
    qs: std::ops::RangeInclusive<u64>,
    margin: f64,
    keep_cells: bool,
) -> Option<PRow> {
    let mut checker = PChecker::new(regime, m, p);
    let mut row: Option<PRow> = None;
    for q in qs {
        let r = checker.check(q, margin);
        let single = PRow {
            p,
            pass: r.pass,
            cells_checked: 1,
            cells: if keep_cells { vec![r.clone()] } else { Vec::new() },
            worst: r,
        };
        row = Some(match row {
            None => single,
            Some(acc) => acc.merge(single),
        });
        if !row.as_ref().expect("set").pass {
            break;
        }
    }
    row
}

/// Checks every admissible `q` for one `p`.
pub fn check_p(regime: Regime, m: u64, p: u64, margin: f64, keep_cells: bool) -> PRow {
    let qs = q_range(regime, m, p);
    check_p_chunk(regime, m, p, qs, margin, keep_cells).unwrap_or_else(|| {
        let cell = GridCell { m, p, q: 0, regime };
        PRow {
            p,
            worst: CellResult {
                cell,
                lo: 0.0,
                hi: f64::INFINITY,
                bits: 53,
                route: None,
                pass: false,
                error: Some("no admissible q".into()),
            },
            pass: false,
            cells_checked: 0,
            cells: Vec::new(),
        }
    })
}

/// Row evaluator used by range certification and bootstrap; the default is
/// [`check_p`], front ends may substitute a parallel one.
pub trait RowEvaluator {
    fn row(&self, regime: Regime, m: u64, p: u64, margin: f64) -> PRow;
}

pub struct Sequential {
    pub keep_cells: bool,
}

impl RowEvaluator for Sequential {
    fn row(&self, regime: Regime, m: u64, p: u64, margin: f64) -> PRow {
        check_p(regime, m, p, margin, self.keep_cells)
    }
}

impl<F: Fn(Regime, u64, u64, f64) -> PRow> RowEvaluator for F {
    fn row(&self, regime: Regime, m: u64, p: u64, margin: f64) -> PRow {
        self(regime, m, p, margin)
    }
}

/// Result of certifying one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub m: u64,
    pub regime: Regime,
    pub margin: f64,
    /// Rows in evaluation order.
    pub rows: Vec<PRow>,
    /// Every passing `p`, ascending.
    pub pass_set: Vec<u64>,
    /// Maximal verified contiguous range: anchored at the low end for the
    /// head and at the high end for the tail.
    pub verified: Option<(u64, u64)>,
}

impl CertReport {
    fn from_rows(regime: Regime, m: u64, margin: f64, rows: Vec<PRow>) -> CertReport {
        let mut pass_set: Vec<u64> = rows.iter().filter(|r| r.pass).map(|r| r.p).collect();
        pass_set.sort_unstable();
        let mut ordered: Vec<(u64, bool)> = rows.iter().map(|r| (r.p, r.pass)).collect();
        ordered.sort_unstable();
        let verified = match regime {
            Regime::Head => contiguous_run(ordered.iter().copied()),
            Regime::Tail => contiguous_run(ordered.iter().rev().copied()).map(|(a, b)| (b, a)),
        };
        CertReport { m, regime, margin, rows, pass_set, verified }
    }

    pub fn row(&self, p: u64) -> Option<&PRow> {
        self.rows.iter().find(|r| r.p == p)
    }
}

/// The run of passes from the first element, as `(first, last)`.
fn contiguous_run(items: impl Iterator<Item = (u64, bool)>) -> Option<(u64, u64)> {
    let mut run: Option<(u64, u64)> = None;
    for (p, pass) in items {
        if !pass {
            break;
        }
        run = Some(match run {
            None => (p, p),
            Some((a, _)) => (a, p),
        });
    }
    run
}

fn check_range(regime: Regime, m: u64, p_lo: u64, p_hi: u64) -> Result<(), CertError> {
    let max_p = match regime {
        Regime::Head => m.saturating_sub(3) / 2,
        Regime::Tail => m / 2,
    };
    if p_lo < 2 || p_lo > p_hi || p_hi > max_p {
        return Err(CertError::Domain(format!("p range [{p_lo}, {p_hi}] invalid for {regime} with M={m}")));
    }
    Ok(())
}

/// Certifies every `p` in `[p_lo, p_hi]`.
pub fn certify_range(
    regime: Regime,
    m: u64,
    p_lo: u64,
    p_hi: u64,
    margin: f64,
    eval: &impl RowEvaluator,
) -> Result<CertReport, CertError> {
    check_range(regime, m, p_lo, p_hi)?;
    let rows = (p_lo..=p_hi).map(|p| eval.row(regime, m, p, margin)).collect();
    Ok(CertReport::from_rows(regime, m, margin, rows))
}

pub fn certify_head(m: u64, p_lo: u64, p_hi: u64, margin: f64) -> Result<CertReport, CertError> {
    certify_range(Regime::Head, m, p_lo, p_hi, margin, &Sequential { keep_cells: false })
}

pub fn certify_tail(m: u64, p_lo: u64, p_hi: u64, margin: f64) -> Result<CertReport, CertError> {
    certify_range(Regime::Tail, m, p_lo, p_hi, margin, &Sequential { keep_cells: false })
}

/// Default `p` range per regime: the head from `k ≥ n/10`, the tail window
/// covering `κ ∈ [0.34, 0.362]`.
pub fn default_range(regime: Regime, m: u64) -> (u64, u64) {
    match regime {
        Regime::Head => ((m / 10).max(2), m.saturating_sub(3) / 2),
        Regime::Tail => ((34 * m / 100).max(2), tail_top(m)),
    }
}

/// Smallest `p` whose interval reaches past `0.362`: `p/M > 0.362`.
pub fn tail_top(m: u64) -> u64 {
    362 * m / 1000 + 1
}

/// A rational `κ = num/den` with its decimal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kappa {
    pub num: u64,
    pub den: u64,
}

impl Kappa {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self <= other`, exactly.
    pub fn le(&self, other: &Kappa) -> bool {
        (self.num as u128) * (other.den as u128) <= (other.num as u128) * (self.den as u128)
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({})", self.num, self.den, self.value())
    }
}

/// The assumption the first head stage must reach down to, `k ≥ n/10`.
pub const HEAD_FLOOR: Kappa = Kappa { num: 1, den: 10 };
/// The assumption the first tail stage must reach up to, `k ≤ 0.362n`.
pub const TAIL_CEILING: Kappa = Kappa { num: 362, den: 1000 };

/// One bootstrap stage. `start` is the first `p` examined (lowest for the
/// head, highest for the tail); `None` picks the least work the chain allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub m: u64,
    pub start: Option<u64>,
}

pub fn default_schedule(regime: Regime) -> Vec<Stage> {
    match regime {
        Regime::Head => vec![
            Stage { m: 100, start: Some(10) },
            Stage { m: 1000, start: Some(230) },
            Stage { m: 10000, start: None },
            Stage { m: 100000, start: None },
            Stage { m: 400000, start: None },
        ],
        Regime::Tail => vec![
            Stage { m: 1000, start: None },
            Stage { m: 10000, start: None },
            Stage { m: 100000, start: None },
            Stage { m: 400000, start: None },
        ],
    }
}

/// `κ` reached by a verified range.
pub fn kappa_of(regime: Regime, m: u64, verified: (u64, u64)) -> Kappa {
    match regime {
        Regime::Head => Kappa { num: verified.1, den: m },
        Regime::Tail => Kappa { num: verified.0 - 1, den: m },
    }
}

/// The `κ` a stage may assume before it runs.
fn prior_kappa(regime: Regime, prev: Option<Kappa>) -> Kappa {
    prev.unwrap_or(match regime {
        Regime::Head => HEAD_FLOOR,
        Regime::Tail => TAIL_CEILING,
    })
}

/// Whether a stage starting at `start` connects to the region `prior`
/// already covers.
pub fn chain_ok(regime: Regime, m: u64, start: u64, prior: Kappa, first: bool) -> bool {
    match regime {
        // covers from (start-1)/M; needs (start-1)/M <= prior
        Regime::Head => Kappa { num: start - 1, den: m }.le(&prior),
        // covers up to start/M; needs start/M >= prior, strictly for the ceiling
        Regime::Tail => {
            let reach = Kappa { num: start, den: m };
            if first {
                !reach.le(&prior)
            } else {
                prior.le(&reach)
            }
        }
    }
}

fn auto_start(regime: Regime, m: u64, prior: Kappa, first: bool) -> u64 {
    let scaled = prior.num as u128 * m as u128;
    let den = prior.den as u128;
    match regime {
        Regime::Head => (scaled / den) as u64 + 1,
        Regime::Tail => {
            if first {
                (scaled / den) as u64 + 1
            } else {
                scaled.div_ceil(den) as u64
            }
        }
    }
}

/// Per-stage outcome of a bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub m: u64,
    pub start: u64,
    pub assumed: Kappa,
    pub report: CertReport,
    pub reached: Kappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub regime: Regime,
    pub margin: f64,
    pub stages: Vec<StageReport>,
    pub kappa: Kappa,
}

impl BootstrapReport {
    /// `(M, verified range)` per stage.
    pub fn trace(&self) -> Vec<(u64, (u64, u64))> {
        self.stages.iter().filter_map(|s| s.report.verified.map(|v| (s.m, v))).collect()
    }
}

/// Runs one stage: scans from `start` away from the assumed region until
/// the first failing `p`.
pub fn run_stage(
    regime: Regime,
    m: u64,
    start: u64,
    margin: f64,
    eval: &impl RowEvaluator,
) -> Result<CertReport, CertError> {
    let (lo_limit, hi_limit) = match regime {
        Regime::Head => (2, m.saturating_sub(3) / 2),
        Regime::Tail => (2, m / 2),
    };
    if start < lo_limit || start > hi_limit {
        return Err(CertError::Domain(format!("stage start {start} outside [{lo_limit}, {hi_limit}] at M={m}")));
    }
    let mut rows = Vec::new();
    let mut p = start;
    loop {
        let row = eval.row(regime, m, p, margin);
        let pass = row.pass;
        rows.push(row);
        let next = match regime {
            Regime::Head => (p < hi_limit).then(|| p + 1),
            Regime::Tail => (p > lo_limit).then(|| p - 1),
        };
        match next {
            Some(n) if pass => p = n,
            _ => break,
        }
    }
    Ok(CertReport::from_rows(regime, m, margin, rows))
}

/// Chained staged refinement. Each stage must start inside the region the
/// previous stage (or the standing assumption) verified.
pub fn bootstrap(
    regime: Regime,
    schedule: &[Stage],
    margin: f64,
    eval: &impl RowEvaluator,
) -> Result<BootstrapReport, CertError> {
    bootstrap_with_progress(regime, schedule, margin, eval, |_| {})
}

pub fn bootstrap_with_progress(
    regime: Regime,
    schedule: &[Stage],
    margin: f64,
    eval: &impl RowEvaluator,
    mut progress: impl FnMut(&StageReport),
) -> Result<BootstrapReport, CertError> {
    if schedule.is_empty() {
        return Err(CertError::Chain("empty schedule".into()));
    }
    let mut prev: Option<Kappa> = None;
    let mut stages = Vec::new();
    for (i, stage) in schedule.iter().enumerate() {
        let first = i == 0;
        let assumed = prior_kappa(regime, prev);
        let start = stage.start.unwrap_or_else(|| auto_start(regime, stage.m, assumed, first));
        if !chain_ok(regime, stage.m, start, assumed, first) {
            return Err(CertError::Chain(format!(
                "stage {i} (M={}, start {start}) does not reach the previously covered region at κ = {assumed}",
                stage.m
            )));
        }
        let report = run_stage(regime, stage.m, start, margin, eval)?;
        let Some(verified) = report.verified else {
            return Err(CertError::Chain(format!("stage {i} (M={}) failed at its start p={start}", stage.m)));
        };
        let reached = kappa_of(regime, stage.m, verified);
        let sr = StageReport { m: stage.m, start, assumed, report, reached };
        progress(&sr);
        stages.push(sr);
        prev = Some(reached);
    }
    let kappa = prev.expect("nonempty schedule");
    Ok(BootstrapReport { regime, margin, stages, kappa })
}

/// Re-checks the chain conditions of a finished bootstrap.
pub fn validate_chain(report: &BootstrapReport) -> Result<(), CertError> {
    let regime = report.regime;
    let mut prev: Option<Kappa> = None;
    for (i, s) in report.stages.iter().enumerate() {
        let assumed = prior_kappa(regime, prev);
        if s.assumed != assumed {
            return Err(CertError::Chain(format!(
                "stage {i} records assumption {} but chain gives {assumed}",
                s.assumed
            )));
        }
        if !chain_ok(regime, s.m, s.start, assumed, i == 0) {
            return Err(CertError::Chain(format!("stage {i} start {} leaves a gap below κ = {assumed}", s.start)));
        }
        let verified = s.report.verified.ok_or_else(|| CertError::Chain(format!("stage {i} verified nothing")))?;
        let anchor = match regime {
            Regime::Head => verified.0,
            Regime::Tail => verified.1,
        };
        if anchor != s.start {
            return Err(CertError::Chain(format!(
                "stage {i} verified range {verified:?} does not start at {}",
                s.start
            )));
        }
        if s.reached != kappa_of(regime, s.m, verified) {
            return Err(CertError::Chain(format!("stage {i} reached κ inconsistent with range {verified:?}")));
        }
        prev = Some(s.reached);
    }
    if prev != Some(report.kappa) {
        return Err(CertError::Chain("final κ does not match the last stage".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_validation() {
        assert!(GridCell::new(Regime::Head, 100, 20, 21).is_ok());
        assert!(GridCell::new(Regime::Head, 100, 20, 22).is_err());
        assert!(GridCell::new(Regime::Head, 100, 1, 1).is_err());
        assert!(GridCell::new(Regime::Tail, 1000, 350, 349).is_err());
        assert!(GridCell::new(Regime::Tail, 1000, 350, 652).is_ok());
    }

    #[test]
    fn merge_prefers_first_failure() {
        let fail = check_cell(&GridCell { m: 100, p: 24, q: 25, regime: Regime::Head }, DEFAULT_MARGIN);
        assert!(!fail.pass);
        let ok = check_cell(&GridCell { m: 100, p: 20, q: 5, regime: Regime::Head }, DEFAULT_MARGIN);
        assert!(ok.pass);
        let row = |r: &CellResult| PRow { p: 1, worst: r.clone(), pass: r.pass, cells_checked: 1, cells: vec![] };
        let merged = row(&ok).merge(row(&fail));
        assert!(!merged.pass);
        assert_eq!(merged.cells_checked, 2);
        assert_eq!(row(&fail).merge(row(&ok)).cells_checked, 1);
    }

    #[test]
    fn kappa_compare() {
        assert!(Kappa { num: 229, den: 1000 }.le(&Kappa { num: 23, den: 100 }));
        assert!(!Kappa { num: 231, den: 1000 }.le(&Kappa { num: 23, den: 100 }));
        assert!(chain_ok(Regime::Head, 1000, 230, Kappa { num: 23, den: 100 }, false));
        assert!(!chain_ok(Regime::Head, 1000, 232, Kappa { num: 23, den: 100 }, false));
        assert!(chain_ok(Regime::Tail, 1000, 363, TAIL_CEILING, true));
        assert!(!chain_ok(Regime::Tail, 1000, 362, TAIL_CEILING, true));
        assert_eq!(auto_start(Regime::Tail, 1000, TAIL_CEILING, true), 363);
        assert_eq!(auto_start(Regime::Head, 100, HEAD_FLOOR, true), 11);
        assert_eq!(tail_top(1000), 363);
    }
}
