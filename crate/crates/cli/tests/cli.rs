use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn mfgclaw(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfgclaw"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Runs `cmd` on `body` and returns the temp dir with outputs under `out/`.
fn run_ok(cmd: &str, body: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), body);
    let o = mfgclaw(&[cmd], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    dir
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn cubic_riemann_fan_has_quarter_speed_shock() {
    let d = run_ok("riemann", r#"{"schema_version":1,"model":{"preset":"cubic"}}"#);
    let fan = read_json(d.path().join("out/fan.json"));
    let waves = fan["fan"]["waves"].as_array().unwrap();
    assert_eq!(waves[0]["kind"], "SHOCK");
    assert!((waves[0]["speed"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(waves[1]["kind"], "RAREFACTION");

    let csv = std::fs::read_to_string(d.path().join("out/riemann_field.csv")).unwrap();
    assert!(csv.starts_with("x,exact,godunov\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 401);
}

#[test]
fn burgers_riemann_is_one_rarefaction() {
    let d = run_ok("riemann", r#"{"schema_version":1,"model":{"preset":"burgers"}}"#);
    let waves = read_json(d.path().join("out/fan.json"))["fan"]["waves"].clone();
    let waves = waves.as_array().unwrap();
    assert_eq!(waves.len(), 1);
    assert_eq!(waves[0]["kind"], "RAREFACTION");
    assert_eq!(waves[0]["speed_lo"], 0.0);
    assert_eq!(waves[0]["speed_hi"], 1.0);
}

#[test]
fn equal_states_give_no_waves() {
    let d = run_ok(
        "riemann",
        r#"{"schema_version":1,"model":{"preset":"cubic"},"riemann":{"left":0.3,"right":0.3}}"#,
    );
    let fan = read_json(d.path().join("out/fan.json"));
    assert!(fan["fan"]["waves"].as_array().unwrap().is_empty());
}

#[test]
fn quartic_characteristics_report() {
    let d = run_ok(
        "characteristics",
        r#"{"schema_version":1,"model":{"preset":"quartic","xi":2.0},"characteristics":{"n_cells":2000}}"#,
    );
    let c = read_json(d.path().join("out/characteristics.json"));
    let lm = &c["landmarks"];
    assert_eq!(lm["t_xi"], 1.5);
    assert_eq!(lm["focus"], serde_json::json!([0.0, 1.0]));
    assert!(lm["s1_initial_speed"].as_f64().unwrap().abs() < 1e-10);
    // The tracked shock born at the focus starts at rest.
    let s1 = c["shocks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| (s["birth_t"].as_f64().unwrap() - 1.0).abs() < 0.05 && s["birth_x"].as_f64().unwrap().abs() < 0.05)
        .expect("shock born at the focus");
    assert!(s1["initial_speed"].as_f64().unwrap().abs() < 0.02, "{s1}");
    assert!(c["plot"]["characteristics"].as_array().unwrap().len() == 41);
    let g = &c["godunov_check"];
    assert!((g["t_star"].as_f64().unwrap() - lm["t_star"].as_f64().unwrap()).abs() < 0.05);
}

#[test]
fn burgers_select_has_no_equilibrium_wedge() {
    let d = run_ok(
        "select",
        r#"{"schema_version":1,"model":{"preset":"burgers"},"select":{"T":1.0,"x_min":-0.5,"x_max":1.5,"n_points":41}}"#,
    );
    let r = read_json(d.path().join("out/selection.json"));
    let regions = r["regions"].as_array().unwrap();
    let classes: Vec<&str> = regions.iter().map(|r| r["classification"].as_str().unwrap()).collect();
    assert_eq!(classes, ["SELECTED", "NO_EQUILIBRIUM", "SELECTED"]);
    assert!((regions[1]["lo"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert!((regions[1]["hi"].as_f64().unwrap() - 0.95).abs() < 1e-12);
    let csv = std::fs::read_to_string(d.path().join("out/selection.csv")).unwrap();
    assert!(csv.starts_with("T,x,sigma_entropy,residual,classification,equilibria\n"));
}

#[test]
fn remark_example_is_monotone() {
    let d = run_ok("monotonicity", r#"{"schema_version":1,"model":{"preset":"remark"},"monotonicity":{"t_max":1.0}}"#);
    let r = read_json(d.path().join("out/monotonicity.json"));
    assert_eq!(r["verdict"]["kind"], "MONOTONE");
    let samples = std::fs::read_to_string(d.path().join("out/monotonicity_samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1 + r["samples"].as_u64().unwrap() as usize);
}

#[test]
fn equilibrium_on_given_and_sampled_measures() {
    let d = run_ok(
        "equilibrium",
        r#"{"schema_version":1,"model":{"preset":"remark"},"seed":11,
            "equilibrium":{"t":1.0,"measures":[{"atoms":[[-1.0],[2.0]],"weights":[0.25,0.75]}],"random":2}}"#,
    );
    let r = read_json(d.path().join("out/equilibrium.json"));
    let results = r["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for res in results {
        assert_eq!(res["report"]["classification"], "UNIQUE");
        assert_eq!(res["nash"][0]["ok"], true);
    }
}

#[test]
fn nproj_three_players_pre_shock() {
    let d = run_ok("nproj", r#"{"schema_version":1,"model":{"preset":"tanh"},"nproj":{"t":0.5,"n_players":3}}"#);
    let r = read_json(d.path().join("out/nproj.json"));
    assert_eq!(r["atoms"].as_array().unwrap().len(), 3);
    assert!(r["nplayer_residual"].as_f64().unwrap() <= 1e-5);
    assert!(r["master_residual"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn viscosity_study_writes_table() {
    let d = run_ok(
        "viscosity",
        r#"{"schema_version":1,"model":{"preset":"burgers"},
            "viscosity":{"T":0.5,"epsilons":[0.05,0.025],"x_min":-1.0,"x_max":2.0,"n_cells":300}}"#,
    );
    let csv = std::fs::read_to_string(d.path().join("out/viscosity.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epsilon,l1_distance,runtime_ms");
    assert_eq!(lines.len(), 3);
    let r = read_json(d.path().join("out/viscosity.json"));
    assert_eq!(r["monotone"], true);
}

#[test]
fn outputs_are_deterministic() {
    let body = r#"{"schema_version":1,"model":{"preset":"remark"},
        "equilibrium":{"t":0.7,"random":3}}"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(mfgclaw(&["equilibrium", "--seed", "5"], &cfg, out).status.code(), Some(0));
    }
    for f in ["equilibrium.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // A different seed draws different measures.
    let c = dir.path().join("c");
    mfgclaw(&["equilibrium", "--seed", "6"], &cfg, &c);
    assert_ne!(std::fs::read(a.join("equilibrium.json")).unwrap(), std::fs::read(c.join("equilibrium.json")).unwrap());
}

#[test]
fn manifest_records_hash_versions_and_tolerances() {
    let body = r#"{"schema_version":1,"model":{"preset":"cubic"},"select":{"n_points":5}}"#;
    let d = run_ok("select", body);
    let m = read_json(d.path().join("out/manifest.json"));
    assert_eq!(m["command"], "select");
    let hash = m["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(m["versions"]["mfgclaw"], mfgclaw::VERSION);
    assert_eq!(m["tolerances"]["min_tol"], 1e-6);
    assert_eq!(m["outputs"], serde_json::json!(["selection.csv", "selection.json"]));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let missing = mfgclaw(&["riemann"], &dir.path().join("nope.json"), &out);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(stderr_json(&missing)["error"]["exit_code"], 2);

    for body in [
        r#"{"schema_version":2,"model":{"preset":"cubic"}}"#,
        r#"{"schema_version":1,"model":{"preset":"cubic"},"bogus":1}"#,
        r#"{"schema_version":1,"model":{"preset":"nonsense"}}"#,
        r#"{"schema_version":1,"model":{"preset":"cubic","path":"m.json"}}"#,
        r#"{"schema_version":1,"model":{"preset":"tanh"},"riemann":{}}"#,
    ] {
        let cfg = write_config(dir.path(), body);
        let o = mfgclaw(&["riemann"], &cfg, &out);
        assert_eq!(o.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&o.stderr));
    }

    // The selection classifier needs the reduced regime.
    let cfg = write_config(dir.path(), r#"{"schema_version":1,"model":{"preset":"remark"}}"#);
    let o = mfgclaw(&["select"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "ReducedRegimeRequired");
}

#[test]
fn solver_errors_exit_3_with_error_json() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version":1,"model":{"preset":"burgers"},
            "viscosity":{"T":1.0,"epsilons":[1000.0],"x_min":-2.0,"x_max":2.0,"n_cells":1600}}"#,
    );
    let o = mfgclaw(&["viscosity"], &cfg, &out);
    assert_eq!(o.status.code(), Some(3));
    let err = read_json(out.join("error.json"));
    assert_eq!(err["error"]["kind"], "StiffnessError");
    assert_eq!(stderr_json(&o), err);
}

#[test]
fn strict_flags_ambiguous_classification() {
    // An oversized tolerance puts the rarefaction residuals next to the threshold.
    let body = r#"{"schema_version":1,"model":{"preset":"cubic"},
        "select":{"T":1.0,"x_min":0.3,"x_max":0.9,"n_points":7,"tol":0.3}}"#;
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("out");
    assert_eq!(mfgclaw(&["select"], &cfg, &out).status.code(), Some(0));
    assert_eq!(mfgclaw(&["select", "--strict"], &cfg, &out).status.code(), Some(4));
    assert_eq!(read_json(out.join("manifest.json"))["ambiguous"], true);
}

#[test]
fn model_file_is_resolved_next_to_config() {
    let dir = TempDir::new().unwrap();
    let model = r#"{
        "schema_version": 1,
        "name": "shifted",
        "hamiltonian": {"kind": "quadratic", "params": {"dim": 1}},
        "terminal_cost": {"kind": "linear", "params": {"f": [[0.0, 1.0]]}},
        "sigma0": {"kind": "mean_profile", "params": {"profile": {"kind": "step", "params": {"at": 0.5, "left": 0.0, "right": 1.0}}}},
        "flux": {"kind": "from_hf"},
        "zeta": [1.0]
    }"#;
    std::fs::write(dir.path().join("model.json"), model).unwrap();
    let cfg = write_config(dir.path(), r#"{"schema_version":1,"model":{"path":"model.json"}}"#);
    let out = dir.path().join("out");
    let o = mfgclaw(&["riemann"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fan = read_json(out.join("fan.json"));
    assert_eq!(fan["x0"], 0.5);
    assert_eq!(read_json(out.join("manifest.json"))["model"], "shifted");
}
