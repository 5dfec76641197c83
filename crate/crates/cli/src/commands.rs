//! The four subcommands as library functions returning in-memory outcomes.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use bwsolve::bridge_model::{preset, PRESET_NAMES};
use bwsolve::evolve::{kato_solve, loglog_slope, oracle_solve_state, relative_discrepancy, RunResult};
use bwsolve::paralin::ParalinearizedSystem;
use bwsolve::parametrix::{build_parametrix, conjugation_residual};
use bwsolve::suites::{
    energy_suite, operators_suite, oracle_suite, parametrix_suite, spread_about_median, SuiteReport,
};
use bwsolve::{Error, Result};

use crate::artifacts::{
    json_bytes, kato_csv, resolve_output_dir, sweep_csv, timeseries_csv, write_all, SweepRow,
};
use crate::config::{Integrator, RunConfig, SuiteName};

/// Sobolev index for the operator-norm suites.
pub const OPERATOR_S: f64 = 1.0;
pub const PARAMETRIX_S: f64 = 2.0;
pub const ENERGY_SIGMA: f64 = 2.0;
/// Relative spread about the median below which a swept metric is bounded.
pub const BOUNDED_SPREAD: f64 = 0.25;

/// Runs the configured integrator without writing anything.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let sys = cfg.build_system(cfg.n_points)?;
    let v0 = cfg.build_data(cfg.n_points)?;
    match cfg.integrator {
        Integrator::Kato => {
            let para = ParalinearizedSystem::new(&sys, cfg.eps_para)?;
            kato_solve(&para, &v0, &cfg.solver)
        }
        Integrator::Oracle => oracle_solve_state(&sys, &v0, &cfg.solver),
    }
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub dir: PathBuf,
    pub hash: String,
    pub result: RunResult,
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulateOutcome> {
    let result = run(cfg)?;
    let hash = cfg.hash();
    let dir = resolve_output_dir(cfg, "simulate");
    let mut files = vec![("timeseries.csv", timeseries_csv(&hash, &result)?)];
    if cfg.integrator == Integrator::Kato {
        files.push(("kato.csv", kato_csv(&hash, &result)?));
    }
    let names: Vec<&str> = files.iter().map(|f| f.0).collect();
    let manifest = json!({
        "command": "simulate",
        "config_hash": hash,
        "config": cfg,
        "files": names,
        "result": result,
    });
    files.push(("manifest.json", json_bytes(&manifest)));
    write_all(&dir, &files)?;
    Ok(SimulateOutcome { dir, hash, result })
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub dir: PathBuf,
    pub report: SuiteReport,
}

pub fn verify(cfg: &RunConfig, suite: SuiteName) -> Result<VerifyOutcome> {
    cfg.validate()?;
    let setup = |n: usize| Ok((cfg.build_system(n)?, cfg.build_data(n)?));
    let report = match suite {
        SuiteName::Operators => operators_suite(&cfg.n_list, cfg.eps_para, OPERATOR_S)?,
        SuiteName::Parametrix => parametrix_suite(&setup, &cfg.n_list, cfg.eps_para, PARAMETRIX_S)?,
        SuiteName::Energy => {
            energy_suite(&setup, &cfg.n_list, cfg.eps_para, ENERGY_SIGMA, cfg.samples, cfg.seed)?
        }
        SuiteName::Oracle => oracle_suite(&setup, cfg.n_points, cfg.eps_para, &cfg.solver)?,
    };
    let hash = cfg.hash();
    let dir = resolve_output_dir(cfg, &format!("verify-{}", suite_name(suite)));
    let doc = json!({
        "command": "verify",
        "suite": suite_name(suite),
        "config_hash": hash,
        "config": cfg,
        "report": report,
    });
    write_all(&dir, &[("report.json", json_bytes(&doc))])?;
    Ok(VerifyOutcome { dir, report })
}

pub fn suite_name(s: SuiteName) -> &'static str {
    match s {
        SuiteName::Operators => "operators",
        SuiteName::Parametrix => "parametrix",
        SuiteName::Energy => "energy",
        SuiteName::Oracle => "oracle",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Grid size N.
    N,
    /// Parabolic regularization ε.
    Eps,
    /// H^{s₁} amplitude of the initial data.
    Amplitude,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::Eps => "eps",
            SweepAxis::Amplitude => "amplitude",
        }
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub rows: Vec<SweepRow>,
    /// (value, error) for every failed child run.
    pub failures: Vec<(f64, Error)>,
}

fn child_config(cfg: &RunConfig, axis: SweepAxis, value: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::N => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::Config(format!("grid size {value} is not an integer")));
            }
            c.n_points = value as usize;
        }
        SweepAxis::Eps => c.solver.epsilon = value,
        SweepAxis::Amplitude => c.data.amplitude = Some(value),
    }
    c.validate()?;
    Ok(c)
}

/// Per-value metrics of one child run.
fn child_metrics(
    cfg: &RunConfig,
    axis: SweepAxis,
    value: f64,
    reference: Option<&RunResult>,
) -> Result<Vec<(String, f64)>> {
    let c = child_config(cfg, axis, value)?;
    let r = run(&c)?;
    let s1 = c.solver.ladder.s1;
    let mut m = vec![
        ("final_norm_s1".to_string(), *r.norm_s1.last().unwrap()),
        ("growth_constant".to_string(), r.growth_constant),
    ];
    if c.integrator == Integrator::Kato {
        m.push(("kato_sweeps".into(), r.kato_increments.len() as f64));
        m.push(("max_kato_ratio".into(), r.kato_ratios().into_iter().fold(0.0, f64::max)));
    }
    match axis {
        SweepAxis::Eps => {
            let reference = reference.expect("eps sweeps carry a reference run");
            let rel = relative_discrepancy(&r, reference, s1)?;
            let scale = reference.norm_s1.iter().copied().fold(0.0, f64::max);
            m.push(("gap_vs_eps0".into(), rel * scale));
            m.push(("relative_gap_vs_eps0".into(), rel));
        }
        SweepAxis::N => {
            let sys = c.build_system(c.n_points)?;
            let para = ParalinearizedSystem::new(&sys, c.eps_para)?;
            let vt = c.build_data(c.n_points)?;
            let p = build_parametrix(&para, &vt, PARAMETRIX_S)?;
            let rep = conjugation_residual(&para, &p, &vt, PARAMETRIX_S)?;
            m.push(("psi_phi_minus_identity".into(), rep.psi_phi_norm));
            m.push(("conjugation_residual_m".into(), rep.m_norm));
            m.push(("offdiag_with_t".into(), rep.offdiag_norm));
        }
        SweepAxis::Amplitude => {
            let a = c.data.amplitude.unwrap_or(1.0);
            if a > 0.0 {
                m.push(("final_norm_over_amplitude".into(), r.norm_s1.last().unwrap() / a));
            }
        }
    }
    Ok(m)
}

fn aggregate(axis: SweepAxis, values: &[f64], per_value: &[Result<Vec<(String, f64)>>]) -> Vec<SweepRow> {
    let mut names: Vec<String> = Vec::new();
    for m in per_value.iter().flatten() {
        for (n, _) in m {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    let series = |name: &str| -> (Vec<f64>, Vec<f64>) {
        values
            .iter()
            .zip(per_value)
            .filter_map(|(v, r)| {
                let m = r.as_ref().ok()?;
                m.iter().find(|(n, _)| n == name).map(|(_, x)| (*v, *x))
            })
            .unzip()
    };
    let row = |metric: String, result: Option<f64>, status: &str| SweepRow {
        axis: axis.name().into(),
        value: "all".into(),
        metric,
        result,
        status: status.into(),
    };
    let mut rows = Vec::new();
    match axis {
        SweepAxis::Eps => {
            let (xs, ys) = series("gap_vs_eps0");
            let slope = loglog_slope(&xs, &ys);
            rows.push(row("slope:gap_vs_eps0".into(), slope, if slope.is_some() { "fit" } else { "unfit" }));
        }
        SweepAxis::Amplitude => {
            let (xs, ys) = series("final_norm_s1");
            let slope = loglog_slope(&xs, &ys);
            rows.push(row("slope:final_norm_s1".into(), slope, if slope.is_some() { "fit" } else { "unfit" }));
        }
        SweepAxis::N => {
            for name in &names {
                let (_, ys) = series(name);
                if ys.len() < 2 {
                    continue;
                }
                let spread = spread_about_median(&ys);
                let status = if spread <= BOUNDED_SPREAD { "bounded" } else { "unbounded" };
                rows.push(row(format!("spread:{name}"), Some(spread), status));
            }
        }
    }
    rows
}

/// Runs one child per value in parallel; failures are flagged per value and
/// the aggregate is written regardless.
pub fn sweep(cfg: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepOutcome> {
    if values.len() < 2 {
        return Err(Error::Precondition(format!(
            "a sweep needs at least 2 values, got {}",
            values.len()
        )));
    }
    cfg.validate()?;
    let reference = match axis {
        SweepAxis::Eps => {
            let mut c = cfg.clone();
            c.solver.epsilon = 0.0;
            Some(run(&c)?)
        }
        _ => None,
    };
    let per_value: Vec<Result<Vec<(String, f64)>>> = values
        .par_iter()
        .map(|&v| child_metrics(cfg, axis, v, reference.as_ref()))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&v, r) in values.iter().zip(&per_value) {
        match r {
            Ok(m) => rows.extend(m.iter().map(|(name, x)| SweepRow {
                axis: axis.name().into(),
                value: format!("{v}"),
                metric: name.clone(),
                result: Some(*x),
                status: "ok".into(),
            })),
            Err(e) => rows.push(SweepRow {
                axis: axis.name().into(),
                value: format!("{v}"),
                metric: "run".into(),
                result: None,
                status: format!("failed:{}", e.cause()),
            }),
        }
    }
    rows.extend(aggregate(axis, values, &per_value));
    for (&v, r) in values.iter().zip(per_value) {
        if let Err(e) = r {
            failures.push((v, e));
        }
    }
    let hash = cfg.hash();
    let dir = resolve_output_dir(cfg, &format!("sweep-{}", axis.name()));
    let doc = json!({
        "command": "sweep",
        "axis": axis.name(),
        "values": values,
        "config_hash": hash,
        "config": cfg,
        "failed_values": failures.iter().map(|(v, e)| json!({"value": v, "cause": e.cause(), "message": e.to_string()})).collect::<Vec<_>>(),
        "rows": rows,
    });
    write_all(&dir, &[("sweep.csv", sweep_csv(&hash, &rows)?), ("sweep.json", json_bytes(&doc))])?;
    Ok(SweepOutcome { dir, rows, failures })
}

/// (name, description) of every built-in system.
pub fn preset_list() -> Vec<(&'static str, String)> {
    PRESET_NAMES
        .iter()
        .map(|&n| (n, preset(n).map(|p| p.description).unwrap_or_default()))
        .collect()
}
