use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mannlab"));
    c.env_remove("MANNLAB_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn base(op: Value, alpha: Value, u: Value, x0: Value) -> Value {
    let dim = u.as_array().unwrap().len();
    serde_json::json!({
        "seed": 11,
        "space": {"kind": "euclidean", "dim": dim},
        "operator": op,
        "schedules": {
            "alpha": alpha,
            "beta": {"kind": "power", "a": 1.0, "b": 1.0},
            "gamma": {"kind": "harmonic"},
            "offset": 2
        },
        "u": u,
        "x0": x0,
        "max_iter": 2000
    })
}

#[test]
fn identity_run_lands_on_u() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        serde_json::json!({"name": "identity", "lambda": 0.5}),
        serde_json::json!({"kind": "constant", "c": 0.5}),
        serde_json::json!([1.0, -2.0, 3.0]),
        serde_json::json!([0.0, 0.0, 0.0]),
    );
    // ‖x_n − u‖ shrinks by ∏(1 − β_k); (n+1)^{-1/2} makes that fast
    cfg["schedules"]["beta"] = serde_json::json!({"kind": "power", "a": 1.0, "b": 0.5});
    let path = write_config(dir.path(), "id.json", &cfg);
    let out = dir.path().join("out");
    let o = run(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["anchor"]["z"], serde_json::json!([1.0, -2.0, 3.0]));
    assert!(s["final_dist_to_z"].as_f64().unwrap() <= 1e-6);
    assert!(out.join("trace.csv").exists());
    assert!(out.join("timing.json").exists());
    assert!(s.get("wall_time_s").is_none());
}

#[test]
fn negation_matches_scalar_recursion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("negation.json");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));

    // T = −I: each coordinate follows x ← β u + γ x + (1−β−γ)(1−2α) x
    let (u, mut x) = ([1.0f64, -1.0], [3.0f64, 2.0]);
    for k in 0..20_000usize {
        let n = (k + 2) as f64;
        let (a, b, g) = (0.5, 1.0 / (n + 1.0), 1.0 / (n + 1.0));
        for i in 0..2 {
            x[i] = b * u[i] + g * x[i] + (1.0 - b - g) * (1.0 - 2.0 * a) * x[i];
        }
    }
    let residual = 2.0 * (x[0] * x[0] + x[1] * x[1]).sqrt();
    let got = s["final_residual"].as_f64().unwrap();
    assert!((got - residual).abs() <= 1e-12, "{got} vs {residual}");
    assert!(got <= 1e-3);
}

#[test]
fn vanishing_alpha_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(
        serde_json::json!({"name": "negation", "lambda": 0.5}),
        serde_json::json!({"kind": "harmonic"}),
        serde_json::json!([1.0]),
        serde_json::json!([0.0]),
    );
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&out.join("verdicts.json"));
    let cond_i = v["entries"].as_array().unwrap().iter().find(|e| e["condition"] == "(i)").unwrap();
    assert_eq!(cond_i["pass"], false);
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        serde_json::json!({"name": "identity", "lambda": 0.5}),
        serde_json::json!({"kind": "constant", "c": 0.5}),
        serde_json::json!([1.0]),
        serde_json::json!([0.0]),
    );
    cfg["stray"] = serde_json::json!(1);
    let path = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(run(&["run", "--config", path.to_str().unwrap(), "--quiet"]).status.code(), Some(1));
    assert_eq!(run(&["run"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn seed_flag_supplies_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        serde_json::json!({"name": "negation", "lambda": 0.5}),
        serde_json::json!({"kind": "constant", "c": 0.5}),
        serde_json::json!([1.0, 1.0]),
        serde_json::json!([0.0, 0.0]),
    );
    cfg.as_object_mut().unwrap().remove("seed");
    let path = write_config(dir.path(), "c.json", &cfg);
    let p = path.to_str().unwrap();
    assert_eq!(run(&["certify", "--config", p, "--quiet"]).status.code(), Some(1));
    let o = run(&["certify", "--config", p, "--seed", "3", "--quiet"]);
    assert!(o.status.success());
    let cert: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cert["seed"], 3);
}

#[test]
fn certify_negation_refutes_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(
        serde_json::json!({"name": "negation", "lambda": 0.5}),
        serde_json::json!({"kind": "constant", "c": 0.5}),
        serde_json::json!([1.0, 1.0]),
        serde_json::json!([0.0, 0.0]),
    );
    let path = write_config(dir.path(), "c.json", &cfg);
    let p = path.to_str().unwrap();
    let o = run(&["certify", "--config", p, "--lambda", "0.6", "--quiet"]);
    assert_eq!(o.status.code(), Some(2));
    let cert: Value = serde_json::from_slice(&o.stdout).unwrap();
    let w = &cert["verdict"]["refuted"];
    assert_eq!(w["x"].as_array().unwrap().len(), 2);
    assert!(w["slack"].as_f64().unwrap() < 0.0);
    let o = run(&["certify", "--config", p, "--lambda", "0.6"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("refuted"));
}

#[test]
fn zhou_rejects_vanishing_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(
        serde_json::json!({"name": "negation", "lambda": 0.5}),
        serde_json::json!({"kind": "constant", "c": 0.5}),
        serde_json::json!([1.0]),
        serde_json::json!([0.0]),
    );
    cfg["schedules"]["gamma"] = serde_json::json!({"kind": "zero"});
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("v");
    let o = run(&[
        "validate-schedule",
        "--config",
        path.to_str().unwrap(),
        "--theorem",
        "zhou",
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(iv)"));
    let v = json(&out.join("verdicts.json"));
    let failed: Vec<&str> = v[0]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["pass"] == false)
        .map(|e| e["condition"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["(iv)"]);
    // the same schedule meets the main conditions
    let o = run(&["validate-schedule", "--config", path.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success());
}

#[test]
fn tau_analyze_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.txt");
    fs::write(&input, "3\n1\n2\n0\n5\n").unwrap();
    let o = run(&["tau-analyze", "--input", input.to_str().unwrap()]);
    assert!(o.status.success());
    let t: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["outcome"], "analysis");
    assert_eq!(t["n0"], 1);
    assert_eq!(t["tau"], serde_json::json!([1, 1, 3, 3]));
    assert_eq!(t["ascent_estimate"], true);
    assert_eq!(t["domination_estimate"], true);
}

#[test]
fn mannlab_out_is_the_fallback_directory() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.json");
    fs::write(&input, "[3, 1, 2, 0, 5]").unwrap();
    let env_dir = dir.path().join("env");
    let o = bin()
        .args(["tau-analyze", "--input", input.to_str().unwrap()])
        .env("MANNLAB_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(env_dir.join("tau.json").exists());
}

#[test]
fn anchor_subcommand_point_and_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(
        serde_json::json!({"name": "diagonal", "params": {"mu": [1.0, -1.0]}, "lambda": 0.5}),
        serde_json::json!({"kind": "constant", "c": 0.5}),
        serde_json::json!([1.0, 1.0]),
        serde_json::json!([0.0, 0.0]),
    );
    let path = write_config(dir.path(), "c.json", &cfg);
    let p = path.to_str().unwrap();
    let o = run(&["anchor", "--config", p, "--t", "0.001", "--quiet"]);
    assert!(o.status.success());
    let a: Value = serde_json::from_slice(&o.stdout).unwrap();
    let x1 = a["x_t"][1].as_f64().unwrap();
    assert!((x1 - 0.001 / 1.999).abs() < 1e-15);
    let o = run(&["anchor", "--config", p, "--quiet"]);
    let a: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(a["projection_gap"].as_f64().unwrap() < 1e-12);
    assert_eq!(a["limit"]["path"].as_array().unwrap().len(), 6);
}

fn alpha_grid_config(cells: Value) -> Value {
    serde_json::json!({
        "seed": 2,
        "space": {"kind": "euclidean", "dim": 3},
        "operator": {"name": "diagonal", "params": {"mu": [1.0, 0.0, -0.5]}, "lambda": 0.5},
        "u": [1.0, 0.2, 0.1],
        "x0": [0.0, 1.0, -1.0],
        "max_iter": 3000,
        "sweep": cells
    })
}

#[test]
fn sweep_over_alpha_passes_condition_one() {
    let cells: Vec<Value> = [0.1, 0.4, 0.8]
        .iter()
        .map(|a| {
            serde_json::json!({
                "id": format!("alpha_{a}"),
                "schedules": {
                    "alpha": {"kind": "constant", "c": a},
                    "beta": {"kind": "power", "a": 1.0, "b": 1.0},
                    "gamma": {"kind": "zero"},
                    "offset": 1
                }
            })
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "s.json", &alpha_grid_config(Value::Array(cells)));
    let out = dir.path().join("out");
    let o = run(&["sweep", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, id) in rows.iter().zip(["alpha_0.1", "alpha_0.4", "alpha_0.8"]) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], id);
        assert_eq!(f[1], "pass");
        assert!(!f[5].is_empty());
    }
    assert_eq!(fs::read_dir(out.join("cells")).unwrap().count(), 3);
}

#[test]
fn empty_sweep_is_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "s.json", &alpha_grid_config(serde_json::json!([])));
    let out = dir.path().join("out");
    let o = run(&["sweep", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("lp4_affine.json");
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(out);
    }
    for f in ["trace.csv", "summary.json", "certificate.json", "verdicts.json"] {
        assert_eq!(fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
}
