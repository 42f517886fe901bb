//! Run artifacts: trace.csv, pulse.json, cdf.csv, landscape.csv,
//! summary.csv, and the run manifest. Numbers are serialized with
//! shortest-roundtrip formatting, so repeat runs of the same build are
//! byte-identical and reads recover the exact written values.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EmpiricalCdf, LandscapeGrid};
use crate::model::ControlPulse;
use crate::optim::RoundRecord;

pub const TRACE_HEADER: &[&str] = &[
    "round",
    "j_min",
    "l_max_estimate",
    "gap",
    "inner_iters",
    "elapsed_s",
];

/// Incremental trace.csv writer; rows are flushed as they arrive.
///
/// Wall time is recorded only when `timings` is on: the column is zero by
/// default so that (config, seed) fixes the file byte-for-byte.
pub struct TraceWriter {
    writer: csv::Writer<fs::File>,
    timings: bool,
}

impl TraceWriter {
    pub fn create(path: &Path, timings: bool) -> Result<Self> {
        let file = fs::File::create(path)?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(TRACE_HEADER)?;
        writer.flush()?;
        Ok(Self { writer, timings })
    }

    pub fn write_row(&mut self, rec: &RoundRecord) -> Result<()> {
        let elapsed = if self.timings { rec.elapsed_s } else { 0.0 };
        self.writer.write_record(&[
            rec.round.to_string(),
            rec.j_min.to_string(),
            rec.l_max_estimate.to_string(),
            rec.gap.to_string(),
            rec.inner_iters.to_string(),
            elapsed.to_string(),
        ])?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Serialized pulse file: K×m values in rad/μs plus the time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PulseFile {
    pub total_time: f64,
    pub slice_count: usize,
    pub channels: usize,
    pub units: String,
    pub values: Vec<Vec<f64>>,
}

pub fn write_pulse_json(path: &Path, pulse: &ControlPulse) -> Result<()> {
    let values: Vec<Vec<f64>> = (0..pulse.slice_count())
        .map(|k| (0..pulse.channels()).map(|j| pulse.values[(k, j)]).collect())
        .collect();
    let file = PulseFile {
        total_time: pulse.total_time,
        slice_count: pulse.slice_count(),
        channels: pulse.channels(),
        units: "rad/us".to_string(),
        values,
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn read_pulse_json(path: &Path) -> Result<ControlPulse> {
    let file: PulseFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.values.len() != file.slice_count
        || file.values.iter().any(|row| row.len() != file.channels)
    {
        return Err(Error::InvalidConfig(format!(
            "pulse file {} has inconsistent shape",
            path.display()
        )));
    }
    let values = DMatrix::from_fn(file.slice_count, file.channels, |k, j| file.values[k][j]);
    ControlPulse::new(values, file.total_time)
}

pub fn write_cdf_csv(path: &Path, cdf: &EmpiricalCdf) -> Result<()> {
    let mut w = csv::Writer::from_writer(fs::File::create(path)?);
    w.write_record(["infidelity", "cumulative_probability"])?;
    let n = cdf.len() as f64;
    for (i, l) in cdf.samples().iter().enumerate() {
        w.write_record(&[l.to_string(), ((i + 1) as f64 / n).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_landscape_csv(path: &Path, grid: &LandscapeGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(fs::File::create(path)?);
    w.write_record(["eps_a", "eps_b", "infidelity"])?;
    for (i, &ea) in grid.axis_a.iter().enumerate() {
        for (j, &eb) in grid.axis_b.iter().enumerate() {
            w.write_record(&[
                ea.to_string(),
                eb.to_string(),
                grid.values[i][j].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One sweep summary row.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub param: String,
    pub l_max_final: f64,
    pub worst_case_final: f64,
    pub rounds: usize,
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(fs::File::create(path)?);
    w.write_record(["param", "l_max_final", "worst_case_final", "rounds"])?;
    for row in rows {
        w.write_record(&[
            row.param.clone(),
            row.l_max_final.to_string(),
            row.worst_case_final.to_string(),
            row.rounds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run manifest written beside the artifacts, including on failure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: serde_json::Value,
    pub status: String,
    pub termination: String,
    #[serde(default)]
    pub final_j_min: Option<f64>,
    #[serde(default)]
    pub worst_case_estimate: Option<f64>,
    #[serde(default)]
    pub l_max_semantics: Option<String>,
    pub artifacts: Vec<PathBuf>,
    pub version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(config: serde_json::Value) -> Self {
        Self {
            config,
            status: "running".to_string(),
            termination: String::new(),
            final_j_min: None,
            worst_case_estimate: None,
            l_max_semantics: None,
            artifacts: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
