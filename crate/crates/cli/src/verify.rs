use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use treeseq_core::checks::{check_all, Property, Violation};
use treeseq_core::tree::{enumerate_free_trees, tree_from_levels, tree_stats, MAX_ENUMERATION_N};
use treeseq_core::{CountSequence, Tree};

use crate::output::Records;
use crate::{parse_range, Common, Verdict};

pub const FORMAT: &str = "treeseq-verify/1";
const BATCH: usize = 8192;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Vertex counts, e.g. `14` or `1..20` (inclusive, at most 26).
    #[arg(long, value_parser = parse_range)]
    pub n: (usize, usize),
    /// Comma-separated properties: unimodal, lc, olc, ulc, realroots, thm2,
    /// thm4, thm5, fisher-ryan, zykov, wingard, counting-edges, konig.
    #[arg(long, value_delimiter = ',', default_value = "unimodal,olc")]
    pub props: Vec<Property>,
    /// Counterexample records written per vertex count (all are counted).
    #[arg(long, default_value_t = 100)]
    pub limit: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct Counterexample<'a> {
    format: &'static str,
    record: &'static str,
    n: usize,
    tree_index: u64,
    property: Property,
    index: Option<usize>,
    detail: &'a str,
    tree: &'a Tree,
    sequence: &'a CountSequence,
}

#[derive(Serialize)]
struct OrderDone {
    format: &'static str,
    record: &'static str,
    n: usize,
    trees: u64,
    counterexamples: u64,
}

#[derive(Serialize)]
struct Summary {
    format: &'static str,
    record: &'static str,
    n_min: usize,
    n_max: usize,
    props: Vec<Property>,
    trees: u64,
    counterexamples: u64,
}

struct Found {
    index: u64,
    tree: Tree,
    sequence: CountSequence,
    violations: Vec<Violation>,
}

fn examine(props: &[Property], index: u64, levels: &[u32]) -> Option<Found> {
    let tree = tree_from_levels(levels);
    let stats = tree_stats(&tree);
    let violations = check_all(props, &tree, &stats);
    (!violations.is_empty()).then_some(Found { index, tree, sequence: stats.iseq, violations })
}

pub fn run(args: VerifyArgs) -> anyhow::Result<Verdict> {
    let (lo, hi) = args.n;
    if lo == 0 || hi > MAX_ENUMERATION_N {
        anyhow::bail!("--n must lie in 1..={MAX_ENUMERATION_N}");
    }
    let mut props = args.props.clone();
    props.sort();
    props.dedup();
    let pool = args.common.pool()?;
    let mut out = Records::open(args.common.out.as_deref())?;
    let (mut total_trees, mut total_bad) = (0u64, 0u64);
    for n in lo..=hi {
        let started = Instant::now();
        let mut trees = enumerate_free_trees(n)?;
        let (mut count, mut bad, mut written) = (0u64, 0u64, 0usize);
        loop {
            let batch: Vec<Vec<u32>> = std::iter::from_fn(|| trees.next_levels()).take(BATCH).collect();
            if batch.is_empty() {
                break;
            }
            let base = count;
            let found: Vec<Found> = pool.install(|| {
                batch.par_iter().enumerate().filter_map(|(i, lv)| examine(&props, base + i as u64, lv)).collect()
            });
            count += batch.len() as u64;
            for f in &found {
                for v in &f.violations {
                    bad += 1;
                    if written < args.limit {
                        written += 1;
                        out.write(&Counterexample {
                            format: FORMAT,
                            record: "counterexample",
                            n,
                            tree_index: f.index,
                            property: v.property,
                            index: v.index,
                            detail: &v.detail,
                            tree: &f.tree,
                            sequence: &f.sequence,
                        })?;
                    }
                }
            }
        }
        out.write(&OrderDone { format: FORMAT, record: "order", n, trees: count, counterexamples: bad })?;
        out.flush()?;
        eprintln!("n={n}: {count} trees, {bad} counterexamples ({:.1?})", started.elapsed());
        total_trees += count;
        total_bad += bad;
    }
    out.write(&Summary {
        format: FORMAT,
        record: "summary",
        n_min: lo,
        n_max: hi,
        props,
        trees: total_trees,
        counterexamples: total_bad,
    })?;
    Ok(if total_bad == 0 { Verdict::Ok } else { Verdict::Failed })
}
