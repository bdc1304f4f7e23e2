use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn pairlind(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pairlind"));
    cmd.args(args).env_remove("PAIRLIND_OUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = pairlind(&args, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("stderr holds one JSON report")
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn decay_trajectory_follows_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "experiment = \"meanfield-trajectory\"\nu0 = [0, 0, -1]\nt_end = 10\nsamples = 101\n[model]\nkind = \"pair-decay\"\n",
    );
    let csv = run_ok("meanfield-trajectory", &cfg, &dir.path().join("t.csv"), &[]);
    assert!(csv.starts_with("t,u_x,u_y,u_z\n"));
    let data = rows(&csv);
    assert_eq!(data.len(), 101);
    for r in data {
        let t: f64 = r[0].parse().unwrap();
        let uz: f64 = r[3].parse().unwrap();
        assert!((uz - (1.0 - 2.0 / (1.0 + t))).abs() <= 1e-8, "t={t}");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("master-curve", "experiment = \"master-curve\"\nn_atoms = [16, 64]\nsamples = 51\n"),
        (
            "gillespie-curve",
            "experiment = \"gillespie-curve\"\nn_atoms = 200\nruns = 500\nseed = 3\nsample_times = [0.5, 2]\n",
        ),
        ("continuum-curve", "experiment = \"continuum-curve\"\ninitial = \"uniform\"\nprofile_times = [1]\n"),
    ];
    for (sub, text) in cases {
        let cfg = write_config(dir.path(), &format!("{sub}.toml"), text);
        for fmt in ["csv", "json"] {
            let a = run_ok(
                sub,
                &cfg,
                &dir.path().join(format!("a.{fmt}")),
                &["--format", fmt],
            );
            let b = run_ok(
                sub,
                &cfg,
                &dir.path().join(format!("b.{fmt}")),
                &["--format", fmt],
            );
            assert_eq!(a, b, "{sub} {fmt}");
            let meta_a = fs::read(dir.path().join(format!("a.{fmt}.meta.json"))).unwrap();
            let meta_b = fs::read(dir.path().join(format!("b.{fmt}.meta.json"))).unwrap();
            assert_eq!(meta_a, meta_b);
        }
    }
}

#[test]
fn thread_count_does_not_change_monte_carlo_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        "experiment = \"gillespie-curve\"\nn_atoms = 100\nruns = 300\nsample_times = [1, 3]\n",
    );
    let one = run_ok(
        "gillespie-curve",
        &cfg,
        &dir.path().join("1.csv"),
        &["--threads", "1"],
    );
    let four = run_ok(
        "gillespie-curve",
        &cfg,
        &dir.path().join("4.csv"),
        &["--threads", "4"],
    );
    assert_eq!(one, four);
    let other = run_ok(
        "gillespie-curve",
        &cfg,
        &dir.path().join("s.csv"),
        &["--seed", "77"],
    );
    assert_ne!(one, other);
}

#[test]
fn master_curve_has_documented_columns_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.toml",
        "experiment = \"master-curve\"\nsamples = 41\n",
    );
    let csv = run_ok("master-curve", &cfg, &dir.path().join("m.csv"), &[]);
    assert!(csv.starts_with("t,survival_N16,survival_N64,survival_N256,survival_inf\n"));
    let data = rows(&csv);
    assert_eq!(data.len(), 41);
    assert_eq!(data[0][1..], ["1.0", "1.0", "1.0", "1.0"]);
    assert!(!csv.contains('\r'));
}

#[test]
fn sidecar_records_hash_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = \"factorization-study\"\nn_atoms = [2, 4]\n";
    let cfg = write_config(dir.path(), "f.toml", text);
    let out = dir.path().join("f.csv");
    let csv = run_ok("factorization-study", &cfg, &out, &[]);
    assert_eq!(rows(&csv).len(), 2);
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(
        meta["config_sha256"],
        hex::encode(Sha256::digest(text.as_bytes()))
    );
    assert_eq!(meta["rows"], 2);
    assert_eq!(meta["tolerances"]["dt"], 1e-3);
    assert!(meta["versions"]["pairlind"].is_string());
}

#[test]
fn continuum_profile_is_attached() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "experiment = \"continuum-curve\"\ninitial = \"beta\"\ngrid_points = 65\nsamples = 11\nprofile_times = [0, 1]\n",
    );
    let csv = run_ok("continuum-curve", &cfg, &dir.path().join("c.csv"), &[]);
    assert!(csv.starts_with("t,mean_excited,support_edge\n"));
    assert_eq!(rows(&csv).len(), 11);
    let profile = fs::read_to_string(dir.path().join("c.csv.profile.csv")).unwrap();
    assert!(profile.starts_with("x,p_t0,p_t1\n"));
    assert_eq!(rows(&profile).len(), 65);
}

#[test]
fn out_dir_variable_redirects_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("redirected");
    let cfg = write_config(
        dir.path(),
        "h.toml",
        "experiment = \"hemisphere-scan\"\noutput_path = \"nested/h.csv\"\nsamples = 5\nt_end = 1\n",
    );
    let o = pairlind(
        &["hemisphere-scan", "--config", cfg.to_str().unwrap()],
        &[("PAIRLIND_OUT_DIR", &target)],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(target.join("h.csv")).unwrap();
    // Three default states, five samples each.
    assert_eq!(rows(&csv).len(), 15);
}

#[test]
fn validation_failures_exit_one_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("master-curve", "", "experiment"),
        ("master-curve", "experiment = \"master-curve\"\nn_atoms = [16, 17]\n", "n_atoms[1]"),
        (
            "meanfield-trajectory",
            "experiment = \"meanfield-trajectory\"\nu0 = [0, 0, 1]\nt_end = 1\ndt = -0.1\n[model]\nkind = \"pair-decay\"\n",
            "dt",
        ),
        ("hemisphere-scan", "experiment = \"master-curve\"\n", "experiment"),
        ("master-curve", "experiment = \"master-curve\"\nbogus = 1\n", "bogus"),
    ];
    for (k, (sub, text, path)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{k}.toml"), text);
        let out = dir.path().join("never.csv");
        let o = pairlind(
            &[
                sub,
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
            &[],
        );
        assert_eq!(o.status.code(), Some(1), "case {k}");
        let report = stderr_json(&o);
        assert_eq!(report["error"], "validation");
        let paths: Vec<&str> = report["violations"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v["path"].as_str().unwrap())
            .collect();
        assert!(paths.contains(path), "case {k}: {paths:?}");
        assert!(!out.exists());
    }
}

#[test]
fn seed_only_applies_to_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", "experiment = \"master-curve\"\n");
    let o = pairlind(
        &[
            "master-curve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "x.csv",
            "--seed",
            "1",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["violations"][0]["path"], "--seed");
}

#[test]
fn missing_output_path_and_bad_flags_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", "experiment = \"master-curve\"\n");
    let o = pairlind(&["master-curve", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["violations"][0]["path"], "output_path");

    let o = pairlind(
        &[
            "master-curve",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            "0",
            "--out",
            "x",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = pairlind(&["master-curve", "--format", "xml"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = pairlind(&["master-curve", "--config", "/nonexistent/c.toml"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let cfg = write_config(
        dir.path(),
        "m.toml",
        "experiment = \"master-curve\"\nn_atoms = [4]\nsamples = 3\n",
    );
    let out = blocker.join("out.csv");
    let o = pairlind(
        &[
            "master-curve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "runtime");
}

#[test]
fn verify_exit_status_matches_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = pairlind(&["verify", "--out", out.to_str().unwrap()], &[]);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("check,passed,detail\n"));
    let all_pass = csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("true"));
    assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 2 }));
    assert_eq!(csv.lines().count(), 16);
}
