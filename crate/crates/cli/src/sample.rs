use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use treeseq_core::seq::{decreasing_suffix_start, increasing_prefix_end, is_ordered_log_concave, is_unimodal};
use treeseq_core::tree::{random_tree_indexed, tree_stats};

use crate::output::Records;
use crate::{Common, Verdict};

pub const FORMAT: &str = "treeseq-sample/1";

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Vertices per tree.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: u64,
    /// Master seed; sample `i` uses stream `i` of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Required increasing prefix, as a decimal fraction of n (floored).
    #[arg(long, default_value = "0.27", value_parser = parse_fraction)]
    pub head_to: Fraction,
    /// Required decreasing suffix start, as a decimal fraction of n (ceiled).
    #[arg(long, default_value = "0.39", value_parser = parse_fraction)]
    pub tail_from: Fraction,
    /// Also write one record per sampled tree.
    #[arg(long)]
    pub per_tree: bool,
    #[command(flatten)]
    pub common: Common,
}

/// A decimal fraction `num / den` parsed exactly from text such as `0.39`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    fn floor_times(self, n: usize) -> usize {
        (self.num * n as u64 / self.den) as usize
    }

    fn ceil_times(self, n: usize) -> usize {
        (self.num * n as u64).div_ceil(self.den) as usize
    }
}

pub fn parse_fraction(s: &str) -> Result<Fraction, String> {
    let bad = || format!("expected a decimal in [0, 1], got {s:?}");
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 9 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let den = 10u64.pow(frac.len() as u32);
    let int: u64 = int.parse().map_err(|_| bad())?;
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = int * den + frac;
    if num > den {
        return Err(bad());
    }
    Ok(Fraction { num, den })
}

#[derive(Debug, Clone, Serialize)]
struct TreeRecord {
    format: &'static str,
    record: &'static str,
    index: u64,
    alpha: usize,
    alpha_over_n: f64,
    /// Largest `h` with `X_0 <= ... <= X_h`.
    increasing_to: usize,
    /// Smallest `l` with `X_l >= ... >= X_alpha`.
    decreasing_from: usize,
    unimodal: bool,
    olc: bool,
    head_ok: bool,
    tail_ok: bool,
}

#[derive(Serialize)]
struct Summary {
    format: &'static str,
    record: &'static str,
    n: usize,
    samples: u64,
    seed: u64,
    head_index: usize,
    tail_index: usize,
    mean_alpha_over_n: f64,
    sd_alpha_over_n: f64,
    min_alpha_over_n: f64,
    max_alpha_over_n: f64,
    unimodal_fraction: f64,
    olc_fraction: f64,
    head_ok_fraction: f64,
    tail_ok_fraction: f64,
    min_increasing_to_over_n: f64,
    max_decreasing_from_over_n: f64,
}

pub fn run(args: SampleArgs) -> anyhow::Result<Verdict> {
    if args.n == 0 || args.samples == 0 {
        anyhow::bail!("need n >= 1 and samples >= 1");
    }
    let n = args.n;
    let head_index = args.head_to.floor_times(n);
    let tail_index = args.tail_from.ceil_times(n);
    let pool = args.common.pool()?;
    let records: Vec<TreeRecord> = pool.install(|| {
        (0..args.samples)
            .into_par_iter()
            .map(|i| {
                let t = random_tree_indexed(n, args.seed, i);
                let st = tree_stats(&t);
                let s = &st.iseq;
                let increasing_to = increasing_prefix_end(s);
                let decreasing_from = decreasing_suffix_start(s);
                TreeRecord {
                    format: FORMAT,
                    record: "tree",
                    index: i,
                    alpha: st.alpha,
                    alpha_over_n: st.alpha as f64 / n as f64,
                    increasing_to,
                    decreasing_from,
                    unimodal: is_unimodal(s),
                    olc: is_ordered_log_concave(s),
                    head_ok: increasing_to >= head_index,
                    tail_ok: decreasing_from <= tail_index,
                }
            })
            .collect()
    });
    let mut out = Records::open(args.common.out.as_deref())?;
    if args.per_tree {
        for r in &records {
            out.write(r)?;
        }
    }
    let k = records.len() as f64;
    let frac = |f: fn(&TreeRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / k;
    let ratios: Vec<f64> = records.iter().map(|r| r.alpha_over_n).collect();
    let mean = ratios.iter().sum::<f64>() / k;
    let var = if records.len() > 1 { ratios.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    let summary = Summary {
        format: FORMAT,
        record: "summary",
        n,
        samples: args.samples,
        seed: args.seed,
        head_index,
        tail_index,
        mean_alpha_over_n: mean,
        sd_alpha_over_n: var.sqrt(),
        min_alpha_over_n: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_alpha_over_n: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        unimodal_fraction: frac(|r| r.unimodal),
        olc_fraction: frac(|r| r.olc),
        head_ok_fraction: frac(|r| r.head_ok),
        tail_ok_fraction: frac(|r| r.tail_ok),
        min_increasing_to_over_n: records.iter().map(|r| r.increasing_to).min().unwrap_or(0) as f64 / n as f64,
        max_decreasing_from_over_n: records.iter().map(|r| r.decreasing_from).max().unwrap_or(0) as f64 / n as f64,
    };
    out.write(&summary)?;
    let all_ok = records.iter().all(|r| r.head_ok && r.tail_ok);
    Ok(if all_ok { Verdict::Ok } else { Verdict::Failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_are_exact() {
        let f = parse_fraction("0.39").unwrap();
        assert_eq!(f.ceil_times(1000), 390);
        assert_eq!(f.ceil_times(1001), 391);
        let g = parse_fraction("0.27").unwrap();
        assert_eq!(g.floor_times(1000), 270);
        assert_eq!(parse_fraction("1").unwrap().floor_times(7), 7);
        assert!(parse_fraction("1.5").is_err());
        assert!(parse_fraction("-0.1").is_err());
    }
}
