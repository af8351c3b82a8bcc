//! End-to-end tests of the command-line interface: artifact schemas,
//! determinism, exit codes, and the documented error JSON.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cavity-squeeze"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("csq_cli_{tag}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn CLI");
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let body = std::fs::read_to_string(path).unwrap();
    let mut header = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in body.lines() {
        if line.starts_with('#') {
            continue;
        }
        if header.is_empty() {
            header = line.split(',').map(|s| s.to_string()).collect();
        } else {
            rows.push(line.split(',').map(|v| v.parse().unwrap()).collect());
        }
    }
    let mut cols = vec![Vec::new(); header.len()];
    for row in rows {
        for (c, v) in row.into_iter().enumerate() {
            cols[c].push(v);
        }
    }
    (header, cols)
}

#[test]
fn dressed_config_b_contains_expected_detunings() {
    let dir = workdir("dressed");
    let out = dir.join("d.csv");
    run_ok(bin().args([
        "dressed",
        "--preset",
        "configB",
        "--motion",
        "false",
        "--out",
        out.to_str().unwrap(),
    ]));
    let (header, cols) = csv_columns(&out);
    assert_eq!(header[0], "n");
    let dp = &cols[header.iter().position(|h| h == "delta_plus_mhz").unwrap()];
    let dm = &cols[header.iter().position(|h| h == "delta_minus_mhz").unwrap()];
    assert!((dp[0] + 18.6).abs() < 0.1, "Δ1+ = {}", dp[0]);
    assert!((dm[0] - 9.6).abs() < 0.1, "Δ1− = {}", dm[0]);
}

#[test]
fn spectrum_config_a_minimum_matches_the_model() {
    let dir = workdir("spectrum");
    let out = dir.join("s.csv");
    run_ok(bin().args(["spectrum", "--preset", "configA", "--out", out.to_str().unwrap()]));
    let (header, cols) = csv_columns(&out);
    let freq = &cols[header.iter().position(|h| h == "freq_mhz").unwrap()];
    let s_x = &cols[header.iter().position(|h| h == "s_x_mdb").unwrap()];
    let s_p = &cols[header.iter().position(|h| h == "s_p_mdb").unwrap()];
    let (imin, min) = s_x
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    assert!((-25.0..=-6.0).contains(&min), "min {min} mdB");
    assert!((freq[imin] - 8.6).abs() <= 1.0, "min at {} MHz", freq[imin]);
    // Antisqueezing of comparable size on the conjugate quadrature.
    let pmax = s_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(pmax > -min * 0.8 && pmax < -min * 1.3, "P antisqueezing {pmax}");
    // Override metadata round-trips into the artifact.
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.contains("# g_mhz = 12"));
}

#[test]
fn artifacts_are_byte_deterministic() {
    let dir = workdir("determinism");
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    run_ok(bin().args(["autocorr", "--preset", "configA", "--out", a.to_str().unwrap()]));
    run_ok(bin().args(["autocorr", "--preset", "configA", "--out", b.to_str().unwrap()]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let (ma, mb) = (dir.join("ma.json"), dir.join("mb.json"));
    run_ok(bin().args(["metrics", "--out", ma.to_str().unwrap()]));
    run_ok(bin().args(["metrics", "--out", mb.to_str().unwrap()]));
    assert_eq!(std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
}

#[test]
fn metrics_report_reproduces_the_headline_numbers() {
    let dir = workdir("metrics");
    let out = dir.join("m.json");
    run_ok(bin().args(["metrics", "--out", out.to_str().unwrap()]));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["photons_per_cavity_decay"].as_f64().unwrap() - 2.04).abs() < 0.02);
    let r = v["kerr_r_eta_at_12mdb_per_w"].as_f64().unwrap();
    assert!((r - 1.6e8).abs() < 0.2e8);
    let refl = v["power_budget_total_kappa"]["reflected_fraction"].as_f64().unwrap();
    assert!((refl - 0.88).abs() < 0.01);
    let scale = v["perfect_cavity_scale"].as_f64().unwrap();
    assert!((scale - 4.857).abs() < 0.01);
}

#[test]
fn missing_preset_exits_2_with_error_json() {
    let out = bin()
        .args(["dressed", "--preset", "configC"])
        .output()
        .expect("spawn CLI");
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value = serde_json::from_str(stderr.trim()).expect("error JSON");
    assert_eq!(v["error"]["kind"], "config");
    assert!(v["error"]["message"].as_str().unwrap().contains("configC"));
}

#[test]
fn numerical_failure_exits_3() {
    // A degenerate dressed manifold (g = 0, identical complex detunings)
    // has no two-exponential regression form.
    let dir = workdir("confluent");
    let out = bin()
        .args([
            "autocorr",
            "--preset",
            "configA",
            "--set",
            "g_mhz=0",
            "--set",
            "delta_a_mhz=0",
            "--set",
            "kappa_mhz=3",
            "--set",
            "gamma_motion_mhz=0",
            "--out",
            dir.join("x.csv").to_str().unwrap(),
        ])
        .output()
        .expect("spawn CLI");
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value = serde_json::from_str(stderr.trim()).expect("error JSON");
    assert_eq!(v["error"]["kind"], "confluent_manifold");
}

#[test]
fn config_file_overrides_are_applied_and_unknown_keys_rejected() {
    let dir = workdir("config");
    let cfg = dir.join("params.cfg");
    std::fs::write(&cfg, "# tweak\ng_mhz = 11.0\neta_d = 0.5\n").unwrap();
    let out = dir.join("d.csv");
    run_ok(bin().args([
        "dressed",
        "--preset",
        "configA",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.contains("# g_mhz = 11"));

    std::fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let out = bin()
        .args(["dressed", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_compare_reports_small_deviations() {
    let dir = workdir("oracle");
    let out = dir.join("oc.json");
    run_ok(bin().args([
        "oracle-compare",
        "--preset",
        "configA",
        "--n-max",
        "4",
        "--eps-mhz",
        "0.1",
        "--cutoff-lifetimes",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["max_moment_rel_deviation"].as_f64().unwrap() < 1e-3);
    assert!(v["autocorr_sup_rel_deviation"].as_f64().unwrap() < 1e-3);
    assert!(v["rescaled_min_diff_mdb"].as_f64().unwrap() < 0.2);
}

#[test]
fn outdir_env_variable_is_honored() {
    let dir = workdir("outdir_env");
    let out = bin()
        .env("CAVITY_SQUEEZE_OUTDIR", &dir)
        .args(["dressed", "--preset", "configA"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("dressed_configA.csv").exists());
}
