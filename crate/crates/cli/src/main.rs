mod certify;
mod formulas;
mod heuristic;
mod output;
mod sample;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exact and certified computations on independent set sequences of trees.
///
/// Exit codes: 0 success, 1 counterexample / failed check, 2 usage or I/O error.
#[derive(Debug, Parser)]
#[command(name = "treeseq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check properties of every free tree in a range of orders.
    Verify(verify::VerifyArgs),
    /// Sample uniform labelled trees and report sequence statistics.
    Sample(sample::SampleArgs),
    /// Exact tables of the counting formulas, optionally against brute force.
    Formulas(formulas::FormulasArgs),
    /// Brute-force fixture records over all labelled trees.
    Oracle(formulas::OracleArgs),
    /// Interval certification of the grid inequality, bootstrap, replay.
    Certify(certify::CertifyArgs),
    /// Floating-point saddle-point thresholds and ratio tables.
    Heuristic(heuristic::HeuristicArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON-lines output file (stdout if omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "TREESEQ_WORKERS")]
    pub workers: Option<usize>,
}

impl Common {
    pub fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        let n = self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        Ok(rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?)
    }
}

/// Outcome of a command that ran to completion.
pub enum Verdict {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => verify::run(a),
        Command::Sample(a) => sample::run(a),
        Command::Formulas(a) => formulas::run(a),
        Command::Oracle(a) => formulas::run_oracle(a),
        Command::Certify(a) => certify::run(a),
        Command::Heuristic(a) => heuristic::run(a),
    };
    match result {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Parses `a`, `a..b` or `a..=b`, both ends inclusive.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("expected N, A..B or A..=B, got {s:?}");
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("7"), Ok((7, 7)));
        assert_eq!(parse_range("1..20"), Ok((1, 20)));
        assert_eq!(parse_range("3..=8"), Ok((3, 8)));
        assert!(parse_range("9..3").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn cli_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
