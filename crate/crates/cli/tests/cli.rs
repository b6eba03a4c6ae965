use std::process::{Command, Output};

use serde_json::Value;

fn normlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normlab"))
        .args(args)
        .env("NORMLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn check_params_defaults_to_reference_set() {
    let out = normlab(&["check-params"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let lemma = &v["lemmas"][0];
    assert_eq!(lemma["lemma_id"], "parameter_chain");
    assert_eq!(lemma["details"]["epsilon"], "2^-1017");
    let conds = lemma["details"]["conditions"].as_array().unwrap();
    assert_eq!(conds.len(), 12);
    assert!(conds.iter().all(|c| c["holds"] == true));
    for key in ["config", "sandwich", "subspaces", "lemmas", "summary", "timing", "version"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["version"]["schema"], 1);
}

#[test]
fn failing_parameters_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("halves.toml");
    let halves = ["gamma", "beta", "eta", "alpha", "rho", "c", "xi", "delta"]
        .iter()
        .map(|k| format!("{k} = \"1/2\"\n"))
        .collect::<String>();
    std::fs::write(&path, format!("[parameter_set]\n{halves}")).unwrap();
    let out = normlab(&["check-params", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameter_chain"));
}

#[test]
fn mc_bounds_matches_arcsine_probability() {
    let out = normlab(&["mc-bounds", "--n", "2", "--m", "1", "--gamma", "0.1", "--trials", "100000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let freq = v["lemmas"][0]["measured_value"].as_f64().unwrap();
    let exact = 2.0 * 0.1f64.asin() / std::f64::consts::PI;
    assert!((freq - 0.0638).abs() < 4.0 * (exact * (1.0 - exact) / 1e5).sqrt());
}

#[test]
fn probe_without_projection_has_zero_floor() {
    let out = normlab(&["probe-subspaces", "--eta", "0", "--rank", "0", "--n", "16", "--trials", "3", "--grid", "256"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["summary"]["goodness_floor"], 0.0);
    assert_eq!(v["subspaces"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = normlab(&["verify-lemmas", "--lemmas", "no_such_lemma"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no_such_lemma") && err.contains("two_sign_vectors"));

    let out = normlab(&["verify-lemmas", "--lemmas", "subspace_volume", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(normlab(&["--n", "1"]).status.code(), Some(2));
    assert_eq!(normlab(&["--bogus-flag"]).status.code(), Some(2));
    assert_eq!(normlab(&["/nonexistent/config.toml"]).status.code(), Some(2));
}

#[test]
fn sample_norm_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = normlab(&["sample-norm", "--n", "16", "--trials", "500", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("lemma_id,instance,status,passed"));
    assert!(lines[1].starts_with("norm_sandwich,"));
}

#[test]
fn config_file_with_flag_override_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "n = 8\nseed = 11\nsubspace_trials = 3\ngrid_size = 256\nmc_trials = 1000\nsandwich_points = 100\n\
         lemma_selection = [\"approx_eigenvector\", \"counterexample_probe\", \"find_lambda\"]\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let a = normlab(&[p, "--n", "12"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let va = json(&a);
    assert_eq!(va["config"]["n"], 12);
    assert_eq!(va["config"]["seed"], 11);
    let b = normlab(&[p, "--n", "12"]);
    assert_eq!(without_timing(va), without_timing(json(&b)));
}

#[test]
fn two_dimensional_euclidean_equivalence_passes() {
    let out = normlab(&["verify-lemmas", "--lemmas", "goodness_equivalence", "--n", "2", "--eta", "0", "--grid", "256"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["lemmas"][0]["details"]["worst_deficiency"], 0.0);
}
