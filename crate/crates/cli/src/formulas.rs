use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use treeseq_core::counts::{
    census_for_prefix, census_records, e_nkt, expected_ik, f_nkt_alternating, formula_records, g1, g2,
    prob_independent, trees_with_independent_set_avoiding, LabelledCensus, OracleRecord, MAX_CENSUS_N,
};

use crate::output::Records;
use crate::{parse_range, Common, Verdict};

pub const FORMAT: &str = "treeseq-formulas/1";

#[derive(Debug, Args)]
pub struct FormulasArgs {
    /// Vertex counts, e.g. `8` or `3..8`.
    #[arg(long, value_parser = parse_range)]
    pub n: (usize, usize),
    /// Compare the closed forms against a brute-force census of all labelled
    /// trees (n <= 9).
    #[arg(long)]
    pub oracle: bool,
    /// Compare the closed forms against a fixture file written by `oracle`.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Vertex counts, e.g. `3..8` (each at most 9).
    #[arg(long, value_parser = parse_range)]
    pub n: (usize, usize),
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct ExtensionRow {
    format: &'static str,
    record: &'static str,
    n: u64,
    k: u64,
    t: u64,
    e: String,
    f: String,
}

#[derive(Serialize)]
struct SizeRow {
    format: &'static str,
    record: &'static str,
    n: u64,
    k: u64,
    prob_independent: Option<String>,
    expected_ik: String,
    g1: Option<String>,
    g2: Option<String>,
}

#[derive(Serialize)]
struct AvoidRow {
    format: &'static str,
    record: &'static str,
    n: u64,
    k: u64,
    l: u64,
    count: String,
}

#[derive(Serialize)]
struct Mismatch<'a> {
    format: &'static str,
    record: &'static str,
    source: &'a str,
    formula: &'a OracleRecord,
    reference: Option<&'a OracleRecord>,
}

#[derive(Serialize)]
struct Comparison<'a> {
    format: &'static str,
    record: &'static str,
    source: &'a str,
    n_min: usize,
    n_max: usize,
    compared: usize,
    mismatches: usize,
}

fn tables(n: u64, out: &mut Records) -> anyhow::Result<()> {
    for k in 1..n {
        for t in 0..=n - k {
            out.write(&ExtensionRow {
                format: FORMAT,
                record: "extension",
                n,
                k,
                t,
                e: e_nkt(n, k, t)?.to_string(),
                f: f_nkt_alternating(n, k, t)?.to_string(),
            })?;
        }
    }
    for k in 0..=n {
        out.write(&SizeRow {
            format: FORMAT,
            record: "size",
            n,
            k,
            prob_independent: prob_independent(n, k).ok().map(|x| x.to_string()),
            expected_ik: expected_ik(n, k)?.to_string(),
            g1: g1(n, k).ok().map(|x| x.to_string()),
            g2: g2(n, k).ok().map(|x| x.to_string()),
        })?;
    }
    for k in 1..=n {
        for l in 0..=n - k {
            out.write(&AvoidRow {
                format: FORMAT,
                record: "avoid",
                n,
                k,
                l,
                count: trees_with_independent_set_avoiding(n, k, l)?.to_string(),
            })?;
        }
    }
    Ok(())
}

/// Brute-force census split by the first Prüfer symbol.
pub fn census(n: usize, pool: &rayon::ThreadPool) -> anyhow::Result<LabelledCensus> {
    if n < 3 {
        return Ok(census_for_prefix(n, &[])?);
    }
    let parts = pool.install(|| {
        (1..=n as u32).into_par_iter().map(|s| census_for_prefix(n, &[s])).collect::<Result<Vec<_>, _>>()
    })?;
    let mut all = parts[0].clone();
    for p in &parts[1..] {
        all.merge(p);
    }
    Ok(all)
}

type Key = (u64, String, u64, Option<u64>, Option<u64>);

fn key(r: &OracleRecord) -> Key {
    (r.n, r.kind.clone(), r.k, r.t, r.l)
}

/// Compares closed-form records against reference records for the same
/// keys, by exact rational value.
fn compare(
    source: &str,
    formula: &[OracleRecord],
    reference: &BTreeMap<Key, OracleRecord>,
    out: &mut Records,
) -> anyhow::Result<usize> {
    let mut bad = 0;
    for f in formula {
        let r = reference.get(&key(f));
        let same = r.is_some_and(|r| r.value().is_some() && r.value() == f.value());
        if !same {
            bad += 1;
            out.write(&Mismatch { format: FORMAT, record: "mismatch", source, formula: f, reference: r })?;
        }
    }
    if formula.len() != reference.len() {
        bad += formula.len().abs_diff(reference.len());
    }
    Ok(bad)
}

fn read_fixture(path: &PathBuf, lo: usize, hi: usize) -> anyhow::Result<BTreeMap<Key, OracleRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: OracleRecord = serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if r.format != treeseq_core::counts::ORACLE_FORMAT {
            anyhow::bail!("{}:{}: unsupported format tag {:?}", path.display(), i + 1, r.format);
        }
        if (lo..=hi).contains(&(r.n as usize)) {
            map.insert(key(&r), r);
        }
    }
    Ok(map)
}

pub fn run(args: FormulasArgs) -> anyhow::Result<Verdict> {
    let (lo, hi) = args.n;
    if lo < 2 {
        anyhow::bail!("--n must be at least 2");
    }
    let mut out = Records::open(args.common.out.as_deref())?;
    for n in lo..=hi {
        tables(n as u64, &mut out)?;
    }
    let mut verdict = Verdict::Ok;
    let formula: Vec<OracleRecord> =
        (lo..=hi).map(|n| formula_records(n as u64)).collect::<Result<Vec<_>, _>>()?.concat();
    if args.oracle {
        if hi > MAX_CENSUS_N {
            anyhow::bail!("--oracle supports n <= {MAX_CENSUS_N}");
        }
        let pool = args.common.pool()?;
        let mut reference = BTreeMap::new();
        for n in lo..=hi {
            for r in census_records(&census(n, &pool)?) {
                reference.insert(key(&r), r);
            }
        }
        let bad = compare("brute-force", &formula, &reference, &mut out)?;
        out.write(&Comparison {
            format: FORMAT,
            record: "comparison",
            source: "brute-force",
            n_min: lo,
            n_max: hi,
            compared: formula.len(),
            mismatches: bad,
        })?;
        if bad > 0 {
            verdict = Verdict::Failed;
        }
    }
    if let Some(path) = &args.fixture {
        let reference = read_fixture(path, lo, hi)?;
        let bad = compare("fixture", &formula, &reference, &mut out)?;
        out.write(&Comparison {
            format: FORMAT,
            record: "comparison",
            source: "fixture",
            n_min: lo,
            n_max: hi,
            compared: formula.len(),
            mismatches: bad,
        })?;
        if bad > 0 {
            verdict = Verdict::Failed;
        }
    }
    Ok(verdict)
}

pub fn run_oracle(args: OracleArgs) -> anyhow::Result<Verdict> {
    let (lo, hi) = args.n;
    if lo < 2 || hi > MAX_CENSUS_N {
        anyhow::bail!("--n must lie in 2..={MAX_CENSUS_N}");
    }
    let pool = args.common.pool()?;
    let mut out = Records::open(args.common.out.as_deref())?;
    for n in lo..=hi {
        for r in census_records(&census(n, &pool)?) {
            out.write(&r)?;
        }
    }
    Ok(Verdict::Ok)
}
