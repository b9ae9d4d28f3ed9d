use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use treeseq_core::certifier::certificate::{replay, replay_full};
use treeseq_core::certifier::{
    bootstrap_with_progress, certify_range, check_p, check_p_chunk, default_range, default_schedule, q_range,
    CellResult, Certificate, Kappa, PRow, ReplayMode, RowEvaluator, Stage, DEFAULT_MARGIN,
};
use treeseq_core::Regime;

use crate::output::Records;
use crate::{Common, Verdict};

pub const FORMAT: &str = "treeseq-certify/1";

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long, default_value = "head")]
    pub regime: Regime,
    /// Grid size M.
    #[arg(long = "M", alias = "m", default_value_t = 100)]
    pub m: u64,
    /// First p to check (default: the regime's standard window).
    #[arg(long)]
    pub p_from: Option<u64>,
    /// Last p to check.
    #[arg(long)]
    pub p_to: Option<u64>,
    /// A cell passes when its upper bound is below 1 - margin.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// Emit every cell, not only the worst cell of each p.
    #[arg(long)]
    pub cells: bool,
    /// Run the staged bootstrap and write a certificate.
    #[arg(long, conflicts_with_all = ["replay", "p_from", "p_to", "cells"])]
    pub bootstrap: bool,
    /// Bootstrap stages as `M[:start]`, comma separated
    /// (default: the built-in schedule for the regime).
    #[arg(long, requires = "bootstrap", value_delimiter = ',', value_parser = parse_stage)]
    pub schedule: Option<Vec<Stage>>,
    /// Re-check a certificate file.
    #[arg(long, conflicts_with_all = ["p_from", "p_to", "cells"])]
    pub replay: Option<PathBuf>,
    /// With --replay: recompute every cell of every recorded row.
    #[arg(long, requires = "replay")]
    pub full: bool,
    /// With --replay: accept enclosures that differ in their bits but
    /// overlap and agree in verdict (default: bit-exact).
    #[arg(long, requires = "replay")]
    pub allow_drift: bool,
    #[command(flatten)]
    pub common: Common,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    let bad = || format!("expected M or M:start, got {s:?}");
    let (m, start) = match s.split_once(':') {
        Some((m, st)) => (m, Some(st.trim().parse().map_err(|_| bad())?)),
        None => (s, None),
    };
    Ok(Stage { m: m.trim().parse().map_err(|_| bad())?, start })
}

/// Splits the `q` range of each row into chunks checked on the pool; chunk
/// results are merged in `q` order, so the row equals the sequential one.
pub struct ParallelRows {
    pool: rayon::ThreadPool,
    keep_cells: bool,
}

const MIN_CHUNK: u64 = 256;

impl RowEvaluator for ParallelRows {
    fn row(&self, regime: Regime, m: u64, p: u64, margin: f64) -> PRow {
        let qs = q_range(regime, m, p);
        let (lo, hi) = (*qs.start(), *qs.end());
        let workers = self.pool.current_num_threads() as u64;
        if hi < lo || workers == 1 {
            return check_p(regime, m, p, margin, self.keep_cells);
        }
        let len = hi - lo + 1;
        let size = len.div_ceil(4 * workers).max(MIN_CHUNK);
        let chunks: Vec<(u64, u64)> =
            (0..len.div_ceil(size)).map(|i| (lo + i * size, (lo + (i + 1) * size - 1).min(hi))).collect();
        let rows: Vec<Option<PRow>> = self.pool.install(|| {
            chunks.par_iter().map(|&(a, b)| check_p_chunk(regime, m, p, a..=b, margin, self.keep_cells)).collect()
        });
        rows.into_iter().flatten().reduce(PRow::merge).expect("nonempty q range")
    }
}

#[derive(Serialize)]
struct RowRecord<'a> {
    format: &'static str,
    record: &'static str,
    p: u64,
    pass: bool,
    cells_checked: u64,
    worst: &'a CellResult,
}

#[derive(Serialize)]
struct CellRecord<'a> {
    format: &'static str,
    record: &'static str,
    #[serde(flatten)]
    cell: &'a CellResult,
}

#[derive(Serialize)]
struct RangeSummary {
    format: &'static str,
    record: &'static str,
    regime: Regime,
    m: u64,
    margin: f64,
    p_from: u64,
    p_to: u64,
    verified: Option<(u64, u64)>,
}

#[derive(Serialize)]
struct BootstrapSummary<'a> {
    format: &'static str,
    record: &'static str,
    regime: Regime,
    margin: f64,
    stages: Vec<(u64, Option<(u64, u64)>)>,
    kappa: Kappa,
    kappa_decimal: f64,
    certificate: Option<&'a str>,
}

#[derive(Serialize)]
struct ReplayRecord<'a> {
    format: &'static str,
    record: &'static str,
    certificate: &'a str,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<treeseq_core::certifier::ReplayReport>,
}

pub fn run(args: CertifyArgs) -> anyhow::Result<Verdict> {
    if !(args.margin > 0.0 && args.margin < 1.0) {
        anyhow::bail!("--margin must lie in (0, 1)");
    }
    let eval = ParallelRows { pool: args.common.pool()?, keep_cells: args.cells };
    if let Some(path) = &args.replay {
        let mode = if args.allow_drift { ReplayMode::Verdicts } else { ReplayMode::BitExact };
        return run_replay(path, args.full, mode, &eval, &args.common);
    }
    if args.bootstrap {
        return run_bootstrap(&args, &eval);
    }
    let (dlo, dhi) = default_range(args.regime, args.m);
    let (p_from, p_to) = (args.p_from.unwrap_or(dlo), args.p_to.unwrap_or(dhi));
    let report = certify_range(args.regime, args.m, p_from, p_to, args.margin, &eval)?;
    let mut out = Records::open(args.common.out.as_deref())?;
    for row in &report.rows {
        for c in &row.cells {
            out.write(&CellRecord { format: FORMAT, record: "cell", cell: c })?;
        }
        out.write(&RowRecord {
            format: FORMAT,
            record: "row",
            p: row.p,
            pass: row.pass,
            cells_checked: row.cells_checked,
            worst: &row.worst,
        })?;
    }
    out.write(&RangeSummary {
        format: FORMAT,
        record: "summary",
        regime: args.regime,
        m: args.m,
        margin: args.margin,
        p_from,
        p_to,
        verified: report.verified,
    })?;
    Ok(if report.verified.is_some() { Verdict::Ok } else { Verdict::Failed })
}

fn run_bootstrap(args: &CertifyArgs, eval: &ParallelRows) -> anyhow::Result<Verdict> {
    let schedule = args.schedule.clone().unwrap_or_else(|| default_schedule(args.regime));
    let started = Instant::now();
    let report = bootstrap_with_progress(args.regime, &schedule, args.margin, eval, |s| {
        eprintln!(
            "M={}: start {} verified {:?} reached κ = {} ({:.1?})",
            s.m,
            s.start,
            s.report.verified,
            s.reached,
            started.elapsed()
        );
    })?;
    let cert = Certificate::from_bootstrap(&report);
    let summary = BootstrapSummary {
        format: FORMAT,
        record: "bootstrap",
        regime: report.regime,
        margin: report.margin,
        stages: report.stages.iter().map(|s| (s.m, s.report.verified)).collect(),
        kappa: report.kappa,
        kappa_decimal: report.kappa.value(),
        certificate: None,
    };
    match &args.common.out {
        Some(path) => {
            cert.write(path)?;
            let shown = path.display().to_string();
            Records::open(None)?.write(&BootstrapSummary { certificate: Some(&shown), ..summary })?;
        }
        None => println!("{}", cert.to_json()?),
    }
    Ok(Verdict::Ok)
}

fn run_replay(
    path: &PathBuf,
    full: bool,
    mode: ReplayMode,
    eval: &ParallelRows,
    common: &Common,
) -> anyhow::Result<Verdict> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let shown = path.display().to_string();
    let result =
        Certificate::from_json(&text).and_then(|c| if full { replay_full(&c, eval, mode) } else { replay(&c, mode) });
    let mut out = Records::open(common.out.as_deref())?;
    let (ok, record) = match result {
        Ok(report) => (
            true,
            ReplayRecord {
                format: FORMAT,
                record: "replay",
                certificate: &shown,
                ok: true,
                error: None,
                report: Some(report),
            },
        ),
        Err(e) => (
            false,
            ReplayRecord {
                format: FORMAT,
                record: "replay",
                certificate: &shown,
                ok: false,
                error: Some(e.to_string()),
                report: None,
            },
        ),
    };
    out.write(&record)?;
    Ok(if ok { Verdict::Ok } else { Verdict::Failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_parse() {
        assert_eq!(parse_stage("100:10"), Ok(Stage { m: 100, start: Some(10) }));
        assert_eq!(parse_stage("10000"), Ok(Stage { m: 10000, start: None }));
        assert!(parse_stage("a:1").is_err());
    }

    #[test]
    fn parallel_rows_match_sequential() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let eval = ParallelRows { pool, keep_cells: true };
        for (regime, m, p) in [(Regime::Head, 1000, 274), (Regime::Head, 1000, 300), (Regime::Tail, 1000, 355)] {
            assert_eq!(eval.row(regime, m, p, DEFAULT_MARGIN), check_p(regime, m, p, DEFAULT_MARGIN, true));
        }
    }
}
