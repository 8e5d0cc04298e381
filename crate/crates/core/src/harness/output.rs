//! CSV and manifest output.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::Result;
use crate::harness::SweepResult;

pub const CSV_HEADER: [&str; 7] = [
    "sweep_value",
    "parameter_name",
    "path_index",
    "rmse",
    "crb",
    "detection_rate",
    "n_sim",
];

/// One parsed line of a results file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub sweep_value: f64,
    pub parameter_name: String,
    pub path_index: usize,
    pub rmse: f64,
    pub crb: f64,
    pub detection_rate: f64,
    pub n_sim: usize,
}

/// Paths written by [`emit_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `sweep_<axis>.csv` and `manifest.toml` into `dir` (created if
/// missing). Floats use the shortest representation that parses back to the
/// same value. The manifest is the resolved scenario and can be run again.
pub fn emit_results(r: &SweepResult, dir: impl AsRef<Path>) -> Result<OutputFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("sweep_{}.csv", r.axis.name()));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(CSV_HEADER)?;
    for p in &r.points {
        for s in &p.stats {
            w.write_record([
                p.point.value.to_string(),
                s.parameter.name().to_string(),
                s.path_index.to_string(),
                s.rmse.to_string(),
                s.crb.to_string(),
                p.detection_rate.to_string(),
                p.n_sim.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let manifest_path = dir.join("manifest.toml");
    let manifest = format!(
        "# chanest {} run manifest; sweep axis: {}\n{}",
        env!("CARGO_PKG_VERSION"),
        r.axis.name(),
        r.scenario.to_toml_string()?
    );
    std::fs::write(&manifest_path, manifest)?;
    Ok(OutputFiles {
        csv: csv_path,
        manifest: manifest_path,
    })
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize().map(|row| Ok(row?)).collect()
}
