use std::fs;
use std::path::Path;
use std::process::Command;

use koopman_hybrid::experiments::presets::{preset, NAMES};
use koopman_hybrid::experiments::{
    compare_runs, emit_config, parse_config, read_manifest, ErrorRecord, ExperimentConfig, Model,
};

fn khsim(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_khsim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("KHSIM_OUTPUT_ROOT")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

const SHORT_KVH: &str = r#"
preset = "kvh_oscillator"
output = "runs/short"

[grid]
nq = 64
np = 64

[time]
t_final = 0.5
checkpoint_interval = 0.25
"#;

#[test]
fn presets_survive_a_round_trip() {
    for name in NAMES {
        let cfg = preset(name).unwrap();
        let text = emit_config(&cfg);
        assert_eq!(parse_config(&text).unwrap(), cfg, "{name}");
    }
}

#[test]
fn preset_overrides_merge_key_by_key() {
    let cfg = parse_config(SHORT_KVH).unwrap();
    let base = preset("kvh_oscillator").unwrap();
    assert_eq!(cfg.model, Model::Kvh);
    assert_eq!(cfg.grid.nq, 64);
    assert_eq!(cfg.grid.q_max, base.grid.q_max);
    assert_eq!(cfg.time.dt, base.time.dt);
    assert_eq!(cfg.checkpoint_times(), vec![0.0, 0.25, 0.5]);
}

#[test]
fn runs_are_deterministic_and_self_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("short.toml"), SHORT_KVH).unwrap();
    let (code, _, err) = khsim(&["run", "short.toml", "--out", "a"], tmp.path());
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = khsim(&["run", "short.toml", "--out", "b"], tmp.path());
    assert_eq!(code, 0, "{err}");
    let csv = |d: &str| fs::read(tmp.path().join(d).join("observables.csv")).unwrap();
    assert_eq!(csv("a"), csv("b"));

    let manifest = read_manifest(&tmp.path().join("a")).unwrap();
    assert_eq!(manifest.status, "ok");
    assert_eq!(manifest.checkpoints.len(), 3);
    assert_eq!(parse_config(&manifest.config_toml).unwrap(), manifest.config);

    let report = compare_runs(&tmp.path().join("a"), &tmp.path().join("b"), None).unwrap();
    assert_eq!(report.max_state_l2, Some(0.0));
    assert_eq!(report.max_density_l1, Some(0.0));
    assert!(tmp.path().join("a/compare_b/report.json").exists());
    assert!(tmp.path().join("a/compare_b/comparison.csv").exists());
}

#[test]
fn oracle_and_compare_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("short.toml"), SHORT_KVH).unwrap();
    assert_eq!(khsim(&["run", "short.toml"], tmp.path()).0, 0);
    assert_eq!(khsim(&["oracle", "short.toml"], tmp.path()).0, 0);
    let (code, out, err) = khsim(&["compare", "runs/short", "runs/short_oracle"], tmp.path());
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("3 checkpoints"), "{out}");
    let manifest = read_manifest(&tmp.path().join("runs/short_oracle")).unwrap();
    assert_eq!(manifest.source, "oracle");
}

#[test]
fn output_root_prefixes_relative_paths() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("short.toml"), SHORT_KVH).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_khsim"))
        .args(["run", "short.toml"])
        .current_dir(tmp.path())
        .env("KHSIM_OUTPUT_ROOT", tmp.path().join("root"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(tmp.path().join("root/runs/short/manifest.json").exists());
}

#[test]
fn bad_configs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_key.toml", "preset = \"figure1\"\n[time]\nstep = 0.1\n", "time.step"),
        ("bad_preset.toml", "preset = \"nope\"\n", "nope"),
        ("negative.toml", "preset = \"figure1\"\n[time]\nt_final = -1.0\n", "-1"),
        ("indivisible.toml", "preset = \"figure1\"\n[time]\ncheckpoint_interval = 0.3333\n", "checkpoint"),
    ];
    for (file, text, needle) in cases {
        fs::write(tmp.path().join(file), text).unwrap();
        let (code, _, err) = khsim(&["validate", file], tmp.path());
        assert_eq!(code, 2, "{file}: {err}");
        assert!(err.contains(needle), "{file}: {err}");
        assert_eq!(khsim(&["run", file], tmp.path()).0, 2);
    }
    assert_eq!(khsim(&["run", "missing.toml"], tmp.path()).0, 2);
}

#[test]
fn validate_prints_the_expanded_config() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("short.toml"), SHORT_KVH).unwrap();
    let (code, out, _) = khsim(&["validate", "short.toml"], tmp.path());
    assert_eq!(code, 0);
    assert_eq!(parse_config(&out).unwrap(), parse_config(SHORT_KVH).unwrap());
}

#[test]
fn leaking_mass_aborts_with_a_record() {
    let tmp = tempfile::tempdir().unwrap();
    // a packet parked against the edge of the box
    let text = r#"
preset = "kvh_oscillator"
[grid]
nq = 64
np = 64
[initial]
q0 = 7.0
[time]
t_final = 0.5
checkpoint_interval = 0.25
"#;
    fs::write(tmp.path().join("edge.toml"), text).unwrap();
    let (code, _, err) = khsim(&["run", "edge.toml", "--out", "edge"], tmp.path());
    assert_eq!(code, 3, "{err}");
    let record: ErrorRecord =
        serde_json::from_slice(&fs::read(tmp.path().join("edge/error.json")).unwrap()).unwrap();
    assert_eq!(record.invariant, "boundary_mass");
    assert_eq!(record.model, "kvh");
    assert_eq!(read_manifest(&tmp.path().join("edge")).unwrap().status, "aborted");
}

#[test]
fn ehrenfest_writes_a_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg: ExperimentConfig = preset("figure1").unwrap();
    cfg.model = Model::Ehrenfest;
    cfg.initial.q0 = 1.0;
    cfg.time.t_final = 2.0;
    cfg.time.checkpoint_interval = Some(0.5);
    fs::write(tmp.path().join("eh.toml"), emit_config(&cfg)).unwrap();
    let (code, _, err) = khsim(&["run", "eh.toml", "--out", "eh"], tmp.path());
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(tmp.path().join("eh/trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,q,p,n_x,n_y,n_z,energy");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 5);
    assert_eq!(rows[0][1], 1.0);
    let e0 = rows[0][6];
    for r in &rows {
        assert!((r[6] - e0).abs() < 1e-8, "energy {} vs {e0}", r[6]);
        let n2 = r[3] * r[3] + r[4] * r[4] + r[5] * r[5];
        assert!((n2 - 1.0).abs() < 1e-8);
    }
}
