//! Versioned JSON certificates for bootstrap runs, and their replay.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    check_cell, hexfloat, validate_chain, BootstrapReport, CellResult, CertError, CertReport, GridCell, Kappa, PRow,
    Regime, Route, StageReport, ESCALATION_BITS,
};

pub const CERT_FORMAT: &str = "treeseq-cert/1";

const NOTE: &str = "margin is the strict-inequality slack standing in for epsilon; \
the certificate establishes the asymptotic inequality, not an effective bound for finite n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub base_bits: u32,
    pub escalation_bits: Vec<u32>,
    pub rounding: String,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { base_bits: 53, escalation_bits: ESCALATION_BITS.to_vec(), rounding: "outward".into() }
    }
}

/// Worst cell of one `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertRow {
    pub p: u64,
    pub q: u64,
    #[serde(with = "hexfloat::serde_hex")]
    pub lo: f64,
    #[serde(with = "hexfloat::serde_hex")]
    pub hi: f64,
    pub bits: u32,
    pub route: Option<Route>,
    pub pass: bool,
    pub cells_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertStage {
    pub m: u64,
    pub start: u64,
    pub assumed: Kappa,
    pub verified: Option<(u64, u64)>,
    pub reached: Kappa,
    pub rows: Vec<CertRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub format: String,
    pub regime: Regime,
    pub margin: f64,
    #[serde(with = "hexfloat::serde_hex")]
    pub threshold: f64,
    pub precision: PrecisionPolicy,
    pub note: String,
    pub stages: Vec<CertStage>,
    pub kappa: Kappa,
    pub kappa_decimal: f64,
}

impl Certificate {
    pub fn from_bootstrap(report: &BootstrapReport) -> Certificate {
        let stages = report
            .stages
            .iter()
            .map(|s| CertStage {
                m: s.m,
                start: s.start,
                assumed: s.assumed,
                verified: s.report.verified,
                reached: s.reached,
                rows: s
                    .report
                    .rows
                    .iter()
                    .map(|r| CertRow {
                        p: r.p,
                        q: r.worst.cell.q,
                        lo: r.worst.lo,
                        hi: r.worst.hi,
                        bits: r.worst.bits,
                        route: r.worst.route,
                        pass: r.pass,
                        cells_checked: r.cells_checked,
                    })
                    .collect(),
            })
            .collect();
        Certificate {
            format: CERT_FORMAT.into(),
            regime: report.regime,
            margin: report.margin,
            threshold: super::threshold(report.margin),
            precision: PrecisionPolicy::default(),
            note: NOTE.into(),
            stages,
            kappa: report.kappa,
            kappa_decimal: report.kappa.value(),
        }
    }

    pub fn to_json(&self) -> Result<String, CertError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Certificate, CertError> {
        let cert: Certificate = serde_json::from_str(text)?;
        if cert.format != CERT_FORMAT {
            return Err(CertError::Format(format!("unsupported format tag {:?}", cert.format)));
        }
        Ok(cert)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CertError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Certificate, CertError> {
        Certificate::from_json(&std::fs::read_to_string(path)?)
    }

    fn row_cell(&self, m: u64, row: &CertRow) -> GridCell {
        GridCell { m, p: row.p, q: row.q, regime: self.regime }
    }

    /// Rebuilds the bootstrap structure from the recorded rows, recomputing
    /// verified ranges from the row verdicts.
    fn skeleton(&self) -> Result<BootstrapReport, CertError> {
        let mut stages = Vec::new();
        for s in &self.stages {
            let rows: Vec<PRow> = s
                .rows
                .iter()
                .map(|r| PRow {
                    p: r.p,
                    worst: CellResult {
                        cell: self.row_cell(s.m, r),
                        lo: r.lo,
                        hi: r.hi,
                        bits: r.bits,
                        route: r.route,
                        pass: r.pass,
                        error: None,
                    },
                    pass: r.pass,
                    cells_checked: r.cells_checked,
                    cells: Vec::new(),
                })
                .collect();
            let report = CertReport::from_rows(self.regime, s.m, self.margin, rows);
            if report.verified != s.verified {
                return Err(CertError::Replay(format!(
                    "stage M={} records verified {:?} but its rows give {:?}",
                    s.m, s.verified, report.verified
                )));
            }
            stages.push(StageReport { m: s.m, start: s.start, assumed: s.assumed, report, reached: s.reached });
        }
        Ok(BootstrapReport { regime: self.regime, margin: self.margin, stages, kappa: self.kappa })
    }

    fn check_shape(&self) -> Result<(), CertError> {
        if self.threshold != super::threshold(self.margin) {
            return Err(CertError::Replay("threshold does not equal 1 - margin".into()));
        }
        for s in &self.stages {
            let step: i64 = match self.regime {
                Regime::Head => 1,
                Regime::Tail => -1,
            };
            for (i, r) in s.rows.iter().enumerate() {
                if r.p as i64 != s.start as i64 + step * i as i64 {
                    return Err(CertError::Replay(format!(
                        "stage M={} rows are not consecutive from {}",
                        s.m, s.start
                    )));
                }
                if !r.pass && i + 1 != s.rows.len() {
                    return Err(CertError::Replay(format!("stage M={} continues past failing p={}", s.m, r.p)));
                }
                if r.lo.is_nan() || r.hi.is_nan() || r.lo > r.hi {
                    return Err(CertError::Replay(format!("row p={} has an empty or NaN enclosure", r.p)));
                }
                if r.pass && r.hi >= self.threshold {
                    return Err(CertError::Replay(format!("row p={} passes with hi >= threshold", r.p)));
                }
            }
        }
        Ok(())
    }
}

/// How strictly a replay compares recomputed enclosures with recorded ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplayMode {
    /// Every recorded enclosure must be reproduced bit for bit.
    #[default]
    BitExact,
    /// Verdicts must match and the two enclosures must overlap; useful
    /// across platforms whose float seeds differ.
    Verdicts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub regime: Regime,
    pub mode: ReplayMode,
    pub rows_checked: usize,
    pub bit_exact: usize,
    /// Cells whose recomputed enclosure differs in its bits but agrees in verdict.
    pub verdict_only: Vec<GridCell>,
    pub kappa: Kappa,
}

impl ReplayReport {
    fn compare(&mut self, cell: GridCell, recorded: (f64, f64), fresh: (f64, f64)) -> Result<(), CertError> {
        self.rows_checked += 1;
        if recorded.0.to_bits() == fresh.0.to_bits() && recorded.1.to_bits() == fresh.1.to_bits() {
            self.bit_exact += 1;
            return Ok(());
        }
        let overlap = recorded.0 <= fresh.1 && fresh.0 <= recorded.1;
        if self.mode == ReplayMode::BitExact || !overlap {
            return Err(CertError::Replay(format!(
                "{cell}: recorded enclosure [{}, {}] but recomputed [{}, {}]",
                hexfloat::format_hex(recorded.0),
                hexfloat::format_hex(recorded.1),
                hexfloat::format_hex(fresh.0),
                hexfloat::format_hex(fresh.1)
            )));
        }
        self.verdict_only.push(cell);
        Ok(())
    }
}

/// Re-checks a certificate: structure, bootstrap chain, and a fresh
/// evaluation of each recorded worst cell.
pub fn replay(cert: &Certificate, mode: ReplayMode) -> Result<ReplayReport, CertError> {
    cert.check_shape()?;
    validate_chain(&cert.skeleton()?)?;
    let mut report = ReplayReport {
        regime: cert.regime,
        mode,
        rows_checked: 0,
        bit_exact: 0,
        verdict_only: Vec::new(),
        kappa: cert.kappa,
    };
    for s in &cert.stages {
        for r in &s.rows {
            let cell = cert.row_cell(s.m, r);
            let fresh = check_cell(&cell, cert.margin);
            if fresh.pass != r.pass || fresh.bits != r.bits && mode == ReplayMode::BitExact {
                return Err(CertError::Replay(format!(
                    "{cell}: recorded (pass={}, bits={}) but recomputed (pass={}, bits={})",
                    r.pass, r.bits, fresh.pass, fresh.bits
                )));
            }
            report.compare(cell, (r.lo, r.hi), (fresh.lo, fresh.hi))?;
        }
    }
    Ok(report)
}

/// Recomputes every cell of every recorded row and compares the row
/// verdicts and worst cells. Expensive: this is the full certification again.
pub fn replay_full(
    cert: &Certificate,
    eval: &impl super::RowEvaluator,
    mode: ReplayMode,
) -> Result<ReplayReport, CertError> {
    let mut report = replay(cert, mode)?;
    report.verdict_only.clear();
    report.bit_exact = 0;
    report.rows_checked = 0;
    for s in &cert.stages {
        for r in &s.rows {
            let fresh = eval.row(cert.regime, s.m, r.p, cert.margin);
            if fresh.pass != r.pass || fresh.worst.cell.q != r.q || fresh.cells_checked != r.cells_checked {
                return Err(CertError::Replay(format!(
                    "M={} p={}: recorded (pass={}, q={}, cells={}) but full recomputation gives (pass={}, q={}, cells={})",
                    s.m, r.p, r.pass, r.q, r.cells_checked, fresh.pass, fresh.worst.cell.q, fresh.cells_checked
                )));
            }
            report.compare(fresh.worst.cell, (r.lo, r.hi), (fresh.worst.lo, fresh.worst.hi))?;
        }
    }
    Ok(report)
}
