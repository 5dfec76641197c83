//! Artifact writers. Every file carries the config hash; nothing is written
//! until the computation has succeeded.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use bwsolve::evolve::RunResult;
use bwsolve::Result;

use crate::config::RunConfig;

pub const OUTPUT_ROOT_ENV: &str = "BWSOLVE_OUTPUT_ROOT";

/// `output_dir` if set, else `$BWSOLVE_OUTPUT_ROOT/<command>-<hash prefix>`,
/// else `bwsolve-out/<command>-<hash prefix>`.
pub fn resolve_output_dir(cfg: &RunConfig, command: &str) -> PathBuf {
    if let Some(d) = &cfg.output_dir {
        return d.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("bwsolve-out"));
    root.join(format!("{command}-{}", &cfg.hash()[..12]))
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn timeseries_csv(hash: &str, run: &RunResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| bwsolve::Error::Io(e.into());
    w.write_record([
        "config_hash",
        "step",
        "t",
        "norm_s1",
        "physical_energy",
        "modified_energy",
        "reality_defect",
        "parity_defect",
    ])
    .map_err(io)?;
    for k in 0..run.times.len() {
        w.write_record([
            hash.to_string(),
            k.to_string(),
            num(run.times[k]),
            num(run.norm_s1[k]),
            num(run.physical_energy[k]),
            opt(run.modified_energy.get(k).copied().flatten()),
            num(run.reality_defect[k]),
            num(run.parity_defect[k]),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| bwsolve::Error::Io(e.into_error()))
}

pub fn kato_csv(hash: &str, run: &RunResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| bwsolve::Error::Io(e.into());
    w.write_record(["config_hash", "sweep", "increment", "ratio"]).map_err(io)?;
    let ratios = run.kato_ratios();
    for (k, inc) in run.kato_increments.iter().enumerate() {
        let ratio = if k == 0 { None } else { ratios.get(k - 1).copied() };
        w.write_record([hash.to_string(), (k + 1).to_string(), num(*inc), opt(ratio)])
            .map_err(io)?;
    }
    w.into_inner().map_err(|e| bwsolve::Error::Io(e.into_error()))
}

/// One row of an aggregated sweep table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    /// The swept value, or `all` for fitted and aggregate rows.
    pub value: String,
    pub metric: String,
    pub result: Option<f64>,
    pub status: String,
}

pub fn sweep_csv(hash: &str, rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| bwsolve::Error::Io(e.into());
    w.write_record(["config_hash", "axis", "value", "metric", "result", "status"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            hash,
            &r.axis,
            &r.value,
            &r.metric,
            &opt(r.result),
            &r.status,
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| bwsolve::Error::Io(e.into_error()))
}

/// Writes a set of named files into `dir`, creating it if needed.
pub fn write_all(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}
