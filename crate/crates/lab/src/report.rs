use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use simplex_core::constants::ExtReal;

use crate::{ExperimentConfig, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No replicate reached the threshold; flagged, not failed.
    EmptyTail,
    /// Reported for reference, no tolerance attached.
    Info,
}

impl Verdict {
    pub fn from_check(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::EmptyTail => "empty_tail",
            Verdict::Info => "info",
        }
    }
}

/// One measured quantity. `param` reads `metric:detail`, e.g. `ks:q=2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub n: u64,
    pub param: String,
    pub threshold: Option<f64>,
    pub estimate: ExtReal,
    pub theory: Option<ExtReal>,
    /// Standard error, or a deterministic bound for oracle rows.
    pub std_error: Option<f64>,
    pub verdict: Verdict,
}

impl ReportRow {
    pub fn metric(&self) -> &str {
        self.param.split(':').next().unwrap_or("")
    }

    /// The finite estimate; `+∞` for empty tails.
    pub fn value(&self) -> f64 {
        self.estimate.to_f64()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    /// Seconds spent; kept out of every serialized form.
    #[serde(skip)]
    pub wall_time: f64,
}

pub const TOOL_VERSION: &str = concat!("simplex-lab ", env!("CARGO_PKG_VERSION"));

pub const CSV_HEADER: [&str; 8] = [
    "experiment",
    "n",
    "param",
    "threshold",
    "estimate",
    "theory",
    "std_error",
    "pass",
];

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_ext(x: ExtReal) -> String {
    fmt_f64(x.to_f64())
}

/// Flushes an in-memory CSV writer into a string.
pub fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV input is UTF-8"))
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, rows: Vec<ReportRow>, wall_time: f64) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            config,
            rows,
            wall_time,
        }
    }

    /// True when no row failed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    /// Rows with the given metric at dimension `n`.
    pub fn rows_for<'a>(
        &'a self,
        metric: &'a str,
        n: u64,
    ) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.n == n && r.metric() == metric)
    }

    /// The single row with this metric and dimension, if there is exactly one.
    pub fn row<'a>(&'a self, metric: &'a str, n: u64) -> Option<&'a ReportRow> {
        let mut it = self.rows_for(metric, n);
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "# {}", self.tool_version).unwrap();
        writeln!(out, "# seed {}", self.config.seed).unwrap();
        writeln!(out, "# config {}", serde_json::to_string(&self.config)?).unwrap();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.experiment.clone(),
                r.n.to_string(),
                r.param.clone(),
                r.threshold.map(fmt_f64).unwrap_or_default(),
                fmt_ext(r.estimate),
                r.theory.map(fmt_ext).unwrap_or_default(),
                r.std_error.map(fmt_f64).unwrap_or_default(),
                r.verdict.as_str().into(),
            ])?;
        }
        out.push_str(&finish_csv(w)?);
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
