use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn vortexlab(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vortexlab"));
    cmd.current_dir(dir).args(args).env_remove("VORTEXLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn run(dir: &Path, command: &str, config: &str, out: &str, extra: &[&str]) -> Output {
    fs::write(dir.join(format!("{out}.json")), config).unwrap();
    let cfg = format!("{out}.json");
    let mut args = vec![command, "--config", &cfg, "--out", out];
    args.extend_from_slice(extra);
    vortexlab(dir, &args, &[])
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

const RADIAL: &str = r#"{"command": "solve-radial", "params": {"r_max": 20, "tol": 1e-8,
    "sample": {"half_width": 6, "spacing": 0.1}}}"#;

#[test]
fn solve_radial_writes_checksummed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "solve-radial", RADIAL, "r", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("second-order residual"));
    let out = dir.path().join("r");
    let manifest = json(out.join("manifest.json"));
    assert_eq!(manifest["command"], "solve-radial");
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["versions"]["vortexlab"], env!("CARGO_PKG_VERSION"));
    let files: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|e| e["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["profile.csv", "profile.json", "vortex.vxs", "radial_report.json"]);
    for e in manifest["outputs"].as_array().unwrap() {
        let bytes = fs::read(out.join(e["file"].as_str().unwrap())).unwrap();
        assert_eq!(e["sha256"], hex::encode(Sha256::digest(&bytes)));
        assert_eq!(e["bytes"], bytes.len());
    }
    let report = json(out.join("radial_report.json"));
    assert!((report["alpha"].as_f64().unwrap() - 0.6032878545).abs() < 1e-8);
    assert!(report["first_order_residual"][0].as_f64().unwrap() < 1e-8);
    assert!((report["sample"]["energy_over_2pi"].as_f64().unwrap() - 1.0).abs() < 5e-3);
    // Defaults are spelled out in the manifest.
    assert_eq!(manifest["config"]["params"]["decay_window"][0], 8.0);
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"seed": 4, "params": {"half_width": 5, "spacing": 0.25, "perturbations": 2}}"#;
    fs::write(dir.path().join("lin.json"), cfg).unwrap();
    let a = vortexlab(dir.path(), &["linops", "--config", "lin.json", "--out", "a", "--threads", "1"], &[]);
    let b = vortexlab(dir.path(), &["linops", "--config", "lin.json", "--out", "b"], &[("VORTEXLAB_THREADS", "3")]);
    assert!(a.status.success() && b.status.success());
    let read = |d: &str| fs::read(dir.path().join(d).join("linops.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(json(dir.path().join("a/manifest.json"))["threads"], 1);
    assert_eq!(json(dir.path().join("b/manifest.json"))["threads"], 3);
    let ma = json(dir.path().join("a/manifest.json"));
    let mb = json(dir.path().join("b/manifest.json"));
    assert_eq!(ma["outputs"], mb["outputs"]);
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "solve-radial", r#"{"params": {"r_max": 20, "sample": {"half_width": 4, "spacing": 0.1, "colour": 1}}}"#, "x", &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "validation");
    assert_eq!(e["error"]["errors"][0]["field"], "params.sample.colour");
    let o = run(dir.path(), "density", r#"{"params": {}, "extra": true}"#, "y", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["errors"][0]["field"], "extra");
}

#[test]
fn out_of_range_values_list_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "ansatz-study", r#"{"params": {"epsilons": [0.5, -1]}}"#, "x", &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    let fields: Vec<&str> = e["error"]["errors"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap()).collect();
    assert_eq!(fields, ["params.epsilons[0]", "params.epsilons[1]"]);
}

#[test]
fn command_mismatch_and_missing_inputs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "density", RADIAL, "x", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["errors"][0]["field"], "command");
    let o = run(dir.path(), "levelset", r#"{"params": {"snapshot": "missing.vxs", "level": 0.5}}"#, "y", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["errors"][0]["field"], "params.snapshot");
    assert!(dir.path().join("y/error.json").exists());
    assert_eq!(json(dir.path().join("y/manifest.json"))["status"], "error");
    let o = vortexlab(dir.path(), &["density", "--config", "nowhere.json"], &[]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(dir.path().join("z.json"), r#"{"params": {}}"#).unwrap();
    let o = vortexlab(dir.path(), &["density", "--config", "z.json"], &[("VORTEXLAB_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["errors"][0]["field"], "threads");
}

#[test]
fn numerical_failure_exits_with_the_module_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"params": {"half_width": 3, "spacing": 0.25, "init": {"kind": "vortex_trace"},
        "settings": {"max_iterations": 3, "tolerance": 1e-10}}}"#;
    let o = run(dir.path(), "solve-planar", cfg, "p", &[]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "numerical");
    assert_eq!(e["error"]["code"], "not_converged");
    assert_eq!(e["error"]["report"]["iterations"], 3);
    assert!(e["error"]["report"].get("wall_time_s").is_none());
}

#[test]
fn verify_identities_passes_on_a_sampled_vortex() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), "solve-radial", RADIAL, "r", &[]).status.success());
    let o = run(dir.path(), "verify-identities", r#"{"params": {"snapshot": "r/vortex.vxs"}}"#, "v", &[]);
    assert!(o.status.success());
    let rep = json(dir.path().join("v/identities.json"));
    let names: Vec<&str> = rep["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["gauge_invariance", "self_duality", "bogomolny_curvature", "coulomb", "zero_mode_1", "zero_mode_2"] {
        assert!(names.contains(&n), "{n}");
    }
    assert_eq!(rep["all_passed"], true, "{rep}");
    // Failing checks are reported, not turned into an error exit.
    let o = run(dir.path(), "verify-identities", r#"{"params": {"snapshot": "r/vortex.vxs", "constant": 1e-6}}"#, "w", &[]);
    assert!(o.status.success());
    assert_eq!(json(dir.path().join("w/identities.json"))["all_passed"], false);
}

#[test]
fn ansatz_study_reports_the_cutoff_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "ansatz-study", r#"{"params": {}}"#, "s", &[]);
    assert!(o.status.success());
    let rep = json(dir.path().join("s/cutoff_study.json"));
    assert!(rep["slope"].as_f64().unwrap() >= 2.7);
    let csv = fs::read_to_string(dir.path().join("s/cutoff_study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("epsilon,sup_v,sup_b"));
}

#[test]
fn ansatz_pipeline_through_the_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cfg = r#"{"params": {"epsilon": 0.1, "normal_spacing": 0.025,
        "chart": {"kind": "sine", "amplitude": 0.1, "spacing": 0.15707963267948966}}}"#;
    let o = run(p, "build-ansatz", cfg, "a", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(p.join("a/ansatz_report.json"));
    assert!(rep["residual"]["relative_l2_error"][0].as_f64().unwrap() < 0.05);

    // The stored chart reproduces the same ansatz.
    let cfg = r#"{"params": {"epsilon": 0.1, "normal_spacing": 0.025, "residual": false,
        "chart": {"kind": "file", "csv": "a/chart.csv", "descriptor": "a/chart.json"}}}"#;
    assert!(run(p, "build-ansatz", cfg, "b", &[]).status.success());
    assert_eq!(fs::read(p.join("a/ansatz.vxs")).unwrap(), fs::read(p.join("b/ansatz.vxs")).unwrap());

    let o = run(p, "nodal", r#"{"params": {"snapshot": "a/ansatz.vxs"}}"#, "n", &[]);
    assert!(o.status.success());
    let g = json(p.join("n/nodal_graph.json"));
    assert!((g["lipschitz"].as_f64().unwrap() / 0.1 - 1.0).abs() < 0.1);

    let o = run(p, "excess", r#"{"params": {"snapshot": "a/ansatz.vxs", "center": [0, 0, 0], "radius": 1, "plane": [[1, 0, 0]]}}"#, "e", &[]);
    assert!(o.status.success());
    assert!(json(p.join("e/excess.json"))["excess"].as_f64().unwrap() > 0.0);

    let o = run(p, "levelset", r#"{"params": {"snapshot": "a/ansatz.vxs", "level": 0.5}}"#, "l", &[]);
    assert!(o.status.success());
    let l = json(p.join("l/levelset.json"));
    assert_eq!(l["slices"].as_array().unwrap().len(), 21);

    let o = run(p, "density", r#"{"params": {"snapshot": "a/ansatz.vxs", "center": [0, 0, 0], "radii": [0.5, 1]}}"#, "d", &[]);
    assert!(o.status.success());
    assert_eq!(json(p.join("d/density.json")).as_array().unwrap().len(), 2);

    // Too small a normal box for the tube.
    let cfg = r#"{"params": {"epsilon": 0.1, "normal_spacing": 0.025, "normal_half_width": 0.5,
        "chart": {"kind": "sine", "amplitude": 0.1, "spacing": 0.15707963267948966}}}"#;
    assert_eq!(run(p, "build-ansatz", cfg, "c", &[]).status.code(), Some(2));
}

#[test]
fn solve_planar_recovers_the_vortex() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"seed": 1, "params": {"half_width": 6, "spacing": 0.2,
        "init": {"kind": "perturbed_vortex", "amplitude": 0.1}, "settings": {"tolerance": 1e-3}}}"#;
    let o = run(dir.path(), "solve-planar", cfg, "p", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(dir.path().join("p/planar_report.json"));
    assert_eq!(rep["convergence"]["converged"], true);
    let err = rep["oracle"]["modulus_sup_error"].as_f64().unwrap();
    assert!(err < 10.0 * 0.2 * 0.2, "{err}");
}
