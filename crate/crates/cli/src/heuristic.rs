use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;
use treeseq_core::asymptotics::{heuristic_threshold, ratio_table, write_csv, ThresholdBracket};
use treeseq_core::Regime;

use crate::output::Records;
use crate::Verdict;

pub const FORMAT: &str = "treeseq-heuristic/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Head,
    Tail,
    Both,
}

#[derive(Debug, Args)]
pub struct HeuristicArgs {
    #[arg(long, value_enum, default_value_t = Which::Both)]
    pub regime: Which,
    /// Grid spacing for the threshold search.
    #[arg(long, default_value_t = 1e-5)]
    pub resolution: f64,
    /// Write a `kappa,tau_star,ratio` table for each regime to `<csv>`
    /// (with `-head` / `-tail` appended when both are requested).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Table spacing in κ.
    #[arg(long, default_value_t = 0.005)]
    pub step: f64,
    /// JSON-lines output file (stdout if omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Record {
    format: &'static str,
    record: &'static str,
    #[serde(flatten)]
    bracket: ThresholdBracket,
}

fn table_kappas(regime: Regime, step: f64) -> Vec<f64> {
    let (a, b) = match regime {
        Regime::Head => (0.05, 0.45),
        Regime::Tail => (0.2, 0.49),
    };
    let n = ((b - a) / step).floor() as usize;
    (0..=n).map(|i| a + step * i as f64).collect()
}

fn csv_path(base: &Path, regime: Regime, both: bool) -> PathBuf {
    if !both {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = base.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    base.with_file_name(format!("{stem}-{regime}{ext}"))
}

pub fn run(args: HeuristicArgs) -> anyhow::Result<Verdict> {
    if args.step.is_nan() || args.step <= 0.0 {
        anyhow::bail!("--step must be positive");
    }
    let regimes: &[Regime] = match args.regime {
        Which::Head => &[Regime::Head],
        Which::Tail => &[Regime::Tail],
        Which::Both => &[Regime::Head, Regime::Tail],
    };
    let mut out = Records::open(args.out.as_deref())?;
    for &regime in regimes {
        let bracket = heuristic_threshold(regime, args.resolution)?;
        out.write(&Record { format: FORMAT, record: "threshold", bracket })?;
        if let Some(base) = &args.csv {
            let path = csv_path(base, regime, args.regime == Which::Both);
            let rows = ratio_table(regime, &table_kappas(regime, args.step))?;
            let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(std::io::BufWriter::new(file), &rows)?;
        }
    }
    Ok(Verdict::Ok)
}
