use std::path::Path;
use std::process::{Command, Output};

use bwsolve::bridge_model::{preset, Profile};
use bwsolve_cli::config::{RunConfig, SystemSource};

fn bwsolve(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwsolve"))
        .args(args)
        .env("BWSOLVE_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, cfg.to_json()).unwrap();
    p.to_string_lossy().into_owned()
}

const LINEAR: [&str; 9] = [
    "simulate", "--preset", "linear", "--n-points", "32", "--dt", "0.005", "--t-final", "0.05",
];

#[test]
fn linear_preset_ten_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut args = LINEAR.to_vec();
    args.extend(["--output-dir", out.to_str().unwrap()]);
    let o = bwsolve(&args, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[0].starts_with("config_hash,step,t,norm_s1"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(lines[1..].iter().all(|l| l.starts_with(hash)));
    assert_eq!(manifest["result"]["n_steps"], 10);
    let kato = std::fs::read_to_string(out.join("kato.csv")).unwrap();
    assert_eq!(kato.lines().count(), 3);
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let o = bwsolve(&LINEAR, tmp.path());
        assert_eq!(o.status.code(), Some(0));
        let dir = std::fs::read_dir(tmp.path()).unwrap().next().unwrap().unwrap().path();
        let bytes = std::fs::read(dir.join(name)).unwrap();
        std::fs::remove_dir_all(dir).unwrap();
        bytes
    };
    assert_eq!(read("timeseries.csv"), read("timeseries.csv"));
    assert_eq!(read("manifest.json"), read("manifest.json"));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bwsolve(&LINEAR, tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let entries: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let name = entries[0].as_ref().unwrap().file_name();
    assert!(name.to_string_lossy().starts_with("simulate-"));
}

#[test]
fn ellipticity_violation_exits_with_precondition_and_no_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = preset("linear").unwrap();
    spec.b = Profile::Cosine {
        mean: 1.0,
        amplitude: 1.5,
        mode: 1,
    };
    let cfg = RunConfig {
        system: SystemSource::Inline { spec },
        n_points: 32,
        output_dir: Some(tmp.path().join("run")),
        ..RunConfig::default()
    };
    let path = write_config(tmp.path(), &cfg);
    let o = bwsolve(&["simulate", "--config", &path], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["cause"], "ellipticity");
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn config_round_trips_through_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.solver.dt = Some(2.5e-4);
    cfg.n_list = vec![32, 64];
    cfg.seed = 99;
    let path = write_config(tmp.path(), &cfg);
    let o = bwsolve(&["simulate", "--config", &path, "--print-config"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let back: RunConfig = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(back, cfg);
    let o = bwsolve(&["simulate", "--config", &path, "--seed", "5", "--print-config"], tmp.path());
    let back: RunConfig = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(back.seed, 5);
}

#[test]
fn malformed_config_exits_with_config_class() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.json");
    std::fs::write(&p, r#"{"n_points": 64, "bogus": 1}"#).unwrap();
    let o = bwsolve(&["simulate", "--config", p.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bwsolve(&["simulate", "--preset", "nope"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_value_sweep_is_a_precondition_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bwsolve(&["sweep", "eps", "--values", "1e-3"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn eps_sweep_fits_unit_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = bwsolve(
        &[
            "sweep", "eps", "--values", "1e-2,1e-3,1e-4", "--n-points", "32", "--output-dir",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let slope = rows.iter().find(|r| &r[3] == "slope:gap_vs_eps0").unwrap();
    let s: f64 = slope[4].parse().unwrap();
    assert!((s - 1.0).abs() < 0.1, "slope {s}");
}

#[test]
fn sweep_flags_partial_failures_and_still_writes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = bwsolve(
        &[
            "sweep", "n", "--values", "32,33,64", "--preset", "linear", "--t-final", "0.01",
            "--output-dir", out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.lines().any(|l| l.contains(",33,run,,failed:config")));
    assert!(text.lines().any(|l| l.contains("spread:psi_phi_minus_identity")));
}

#[test]
fn verify_operators_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = bwsolve(
        &["verify", "operators", "--n-list", "32,64", "--output-dir", out.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["passed"], true);
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_parametrix_with_large_background_reports_smallness() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bwsolve(
        &["verify", "parametrix", "--n-list", "32,64", "--amplitude", "50"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["cause"], "smallness");
}

#[test]
fn preset_list_names_every_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bwsolve(&["preset", "list", "--json"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let doc: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc.len(), bwsolve::bridge_model::PRESET_NAMES.len());
}
