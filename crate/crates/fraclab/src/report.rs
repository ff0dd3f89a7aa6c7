//! Report and CSV emission. Reports are deterministic: fixed field order,
//! no timestamps, shortest-round-trip float formatting — identical configs
//! produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lemmas::ScalingFit;
use crate::solver::SeriesRow;
use crate::weight::RatioSample;

pub const REPORT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Names the first violated invariant and the module that raised it.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub module: String,
    pub detail: String,
}

#[derive(Serialize)]
pub struct Report<T: Serialize> {
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
    #[serde(flatten)]
    pub payload: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, payload: T) -> Self {
        Report { version: REPORT_VERSION, command, violation: None, payload }
    }

    pub fn with_violation(mut self, violation: Option<Violation>) -> Self {
        self.violation = violation;
        self
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output dir {}: {e}", dir.display())))
}

/// Writes `report.json` into `dir` and returns its path.
pub fn write_report<T: Serialize>(dir: &Path, report: &Report<T>) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes `series.csv` with the public column contract `t,phi,l2,linf`.
pub fn write_series_csv(dir: &Path, rows: &[SeriesRow]) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("series.csv");
    let mut out = String::from("t,phi,l2,linf\n");
    for row in rows {
        out.push_str(&format!("{},{},{},{}\n", row.t, row.phi, row.l2, row.linf));
    }
    fs::write(&path, out)?;
    Ok(path)
}

/// Writes `ratios.csv` with columns `t,r,ratio`.
pub fn write_ratios_csv(dir: &Path, samples: &[RatioSample]) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("ratios.csv");
    let mut out = String::from("t,r,ratio\n");
    for s in samples {
        out.push_str(&format!("{},{},{}\n", s.t, s.r, s.ratio));
    }
    fs::write(&path, out)?;
    Ok(path)
}

/// Writes `samples.csv` with every scaling-fit sample point.
pub fn write_scaling_samples_csv(dir: &Path, fits: &[ScalingFit]) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("samples.csv");
    let mut out = String::from("case_id,gamma,alpha,scale,integral,tail_fraction\n");
    for fit in fits {
        let alpha = fit.alpha.map(|a| a.to_string()).unwrap_or_default();
        for (&(scale, integral), &tail) in fit.sample_points.iter().zip(&fit.tail_fractions) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fit.case_id, fit.gamma, alpha, scale, integral, tail
            ));
        }
    }
    fs::write(&path, out)?;
    Ok(path)
}
