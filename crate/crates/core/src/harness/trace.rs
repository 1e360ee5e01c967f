//! Trace CSV and run-manifest persistence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{LinesearchSection, RunConfig};
use crate::planner::{PlanRequest, PlannedParams};
use crate::solver::{IterationRecord, RunStatus, StopCriteria, TieBreak};

pub const COLUMNS: [&str; 8] = ["k", "phi", "merit", "envelope", "D_step", "residual_norm", "tau", "wall_ns"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn write_trace<W: std::io::Write>(out: W, rows: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            format_float(r.phi),
            format_float(r.merit),
            format_float(r.envelope),
            format_float(r.d_step),
            format_float(r.residual_norm),
            r.tau.map(format_float).unwrap_or_default(),
            r.wall_ns.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, rows: &[IterationRecord]) -> Result<()> {
    write_trace(std::fs::File::create(path)?, rows)
}

/// One parsed trace row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub phi: f64,
    pub merit: f64,
    pub envelope: f64,
    #[serde(rename = "D_step")]
    pub d_step: f64,
    pub residual_norm: f64,
    pub tau: Option<f64>,
    pub wall_ns: u64,
}

pub fn read_trace<R: std::io::Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::Config(format!("unexpected trace header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>> {
    read_trace(std::fs::File::open(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Everything needed to replay a run, plus how it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub instance: String,
    pub instance_params: serde_json::Value,
    pub kernel: String,
    pub plan_request: PlanRequest,
    pub planned: PlannedParams,
    pub x_minus1: Vec<f64>,
    pub x0: Vec<f64>,
    pub stop: StopCriteria,
    pub linesearch: Option<LinesearchSection>,
    pub tie_break: TieBreak,
    pub seed: u64,
    pub version: String,
    pub status: RunStatus,
    pub iterations: usize,
    pub failure: Option<String>,
    pub trace_file: String,
}

impl RunManifest {
    /// The configuration that reproduces this run.
    pub fn to_config(&self) -> RunConfig {
        RunConfig {
            instance: self.instance.clone(),
            instance_params: self.instance_params.clone(),
            kernel: None,
            plan: self.plan_request.clone(),
            start: crate::harness::config::StartPoints {
                x0: Some(self.x0.clone()),
                x_minus1: Some(self.x_minus1.clone()),
            },
            stop: self.stop,
            linesearch: self.linesearch.unwrap_or_default(),
            output_dir: PathBuf::from("."),
            name: None,
            seed: self.seed,
            tie_break: self.tie_break,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// `<dir>/<base>.csv` and `<dir>/<base>.manifest.json`.
pub fn output_paths(dir: &Path, base: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{base}.csv")), dir.join(format!("{base}.manifest.json")))
}
