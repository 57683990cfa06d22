mod common;

use std::path::Path;

use common::{galign, galign_stdin, json, ok, snapshot, subdir};

fn generate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["generate"];
    args.extend_from_slice(extra);
    ok(&galign(dir, &args));
}

#[test]
fn generate_writes_the_requested_count_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (subdir(tmp.path(), "a"), subdir(tmp.path(), "b"));
    let args = [
        "--classes",
        "5",
        "--per-class",
        "20",
        "--pose",
        "vonmises:0:2",
        "--manifold",
        "so2",
        "--seed",
        "7",
    ];
    generate(&a, &args);
    generate(&b, &args);
    let data = json(&a.join("dataset.json"));
    assert_eq!(data["specimens"].as_array().unwrap().len(), 100);
    assert_eq!(json(&a.join("generate.json"))["seed"], 7);
    assert_eq!(snapshot(&a), snapshot(&b));
    assert!(a.join("config.toml").exists());
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = galign(&missing, &["generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));

    let out = galign(tmp.path(), &["generate", "--set", "alpha=2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let out = galign(tmp.path(), &["generate", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = galign(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = galign(tmp.path(), &["verify", "lemma9"]);
    assert_eq!(out.status.code(), Some(1));

    let out = galign(tmp.path(), &["simulate", "--dataset", "/definitely/missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(tmp.path().join("bad.json"), "{}").unwrap();
    let bad = tmp.path().join("bad.json");
    let out = galign(tmp.path(), &["simulate", "--dataset", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = galign(tmp.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(1));
}

fn so2_dataset(dir: &Path, n: &str, pose: &str, seed: &str) -> String {
    generate(
        dir,
        &[
            "--classes",
            "1",
            "--per-class",
            n,
            "--pose",
            pose,
            "--manifold",
            "so2",
            "--jitter",
            "0",
            "--seed",
            seed,
        ],
    );
    dir.join("dataset.json").to_string_lossy().into_owned()
}

#[test]
fn oracle_full_update_hits_zero_at_step_one() {
    let tmp = tempfile::tempdir().unwrap();
    let data = so2_dataset(tmp.path(), "300", "uniform", "3");
    ok(&galign(
        tmp.path(),
        &[
            "simulate",
            "--dataset",
            &data,
            "--canonicalizer",
            "oracle",
            "--alpha",
            "1",
        ],
    ));
    let csv = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("#galign-trajectory v1"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "sigma2").unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][col].parse::<f64>().unwrap() > 1.0);
    assert_eq!(rows[1][col].parse::<f64>().unwrap(), 0.0);
    let manifest = json(&tmp.path().join("run.json"));
    assert_eq!(manifest["stop"]["reason"], "variance_collapsed");
}

#[test]
fn beta_controlled_plot_annotates_the_fitted_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let data = so2_dataset(tmp.path(), "2000", "vonmises:0:5", "5");
    ok(&galign(
        tmp.path(),
        &[
            "simulate",
            "--dataset",
            &data,
            "--canonicalizer",
            "noisy",
            "--alpha",
            "0.1",
            "--beta",
            "0.25",
            "--set",
            "selection=random",
            "--seed",
            "5",
        ],
    ));
    let svg = std::fs::read_to_string(tmp.path().join("trajectory.svg")).unwrap();
    let tag = svg.split(r#"id="fit" data-value=""#).nth(1).unwrap();
    let fitted: f64 = tag[..tag.find('"').unwrap()].parse().unwrap();
    assert!((fitted - 0.925).abs() < 0.02, "{fitted}");
    let manifest = json(&tmp.path().join("run.json"));
    assert_eq!(manifest["lambda_hat"].as_f64().unwrap(), fitted);
    assert!((manifest["lambda"].as_f64().unwrap() - 0.925).abs() < 1e-12);
}

#[test]
fn no_plot_skips_svg_and_keeps_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let data = so2_dataset(tmp.path(), "200", "vonmises:0:2", "4");
    let (a, b) = (subdir(tmp.path(), "a"), subdir(tmp.path(), "b"));
    let args = [
        "simulate",
        "--dataset",
        &data,
        "--canonicalizer",
        "noisy",
        "--alpha",
        "0.1",
        "--steps",
        "10",
    ];
    ok(&galign(&a, &args));
    let mut quiet = args.to_vec();
    quiet.push("--no-plot");
    ok(&galign(&b, &quiet));
    assert!(a.join("trajectory.svg").exists());
    assert!(!b.join("trajectory.svg").exists());
    assert_eq!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(b.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let data = so2_dataset(tmp.path(), "200", "vonmises:0:2", "4");
    let (a, b) = (subdir(tmp.path(), "a"), subdir(tmp.path(), "b"));
    ok(&galign(
        &a,
        &[
            "simulate",
            "--dataset",
            &data,
            "--canonicalizer",
            "noisy",
            "--steps",
            "8",
            "--set",
            "alpha=0.2",
            "--seed",
            "9",
        ],
    ));
    let config = a.join("config.toml");
    let text = std::fs::read_to_string(&config).unwrap();
    assert!(text.contains("alpha = 0.2") && text.contains("seed = 9"));
    ok(&galign(&b, &["simulate", "--config", config.to_str().unwrap()]));
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn verify_defs_passes_and_writes_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&galign(tmp.path(), &["verify", "defs", "lemma1"])).stdout.clone();
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("PASS def1_oracle_exact: 1.000000e3 == 1.000000e3"));
    let report = json(&tmp.path().join("report.json"));
    assert_eq!(report["passed"], true);
    let suites = report["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 2);
    assert_eq!(suites[0]["suite"], "defs");
    for check in suites[0]["checks"].as_array().unwrap() {
        assert!(check["bound"].is_number() && check["relation"].is_string());
    }
}

fn roto_dataset(dir: &Path) -> String {
    generate(dir, &["--classes", "4", "--per-class", "10", "--seed", "11"]);
    dir.join("dataset.json").to_string_lossy().into_owned()
}

fn cells(dir: &Path) -> Vec<(usize, f64)> {
    let csv = std::fs::read_to_string(dir.join("robustness.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("#galign-robustness v1"));
    lines.next();
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[6].parse().unwrap())
        })
        .collect()
}

#[test]
fn robustness_oracle_is_flat_and_identity_peaks_upright() {
    let tmp = tempfile::tempdir().unwrap();
    let data = roto_dataset(tmp.path());
    let (a, b) = (subdir(tmp.path(), "oracle"), subdir(tmp.path(), "identity"));
    let common = [
        "--dataset",
        &data,
        "--set",
        "steps=0",
        "--set",
        "test_per_class=5",
        "--templates",
        "prototype",
    ];
    let mut args = vec!["robustness", "--canonicalizer", "oracle"];
    args.extend_from_slice(&common);
    ok(&galign(&a, &args));
    let oracle = cells(&a);
    assert_eq!(oracle.len(), 51);
    assert!(oracle.iter().all(|(_, acc)| *acc == oracle[0].1));
    for s in ["1", "1.125", "1.25"] {
        assert!(a.join(format!("polar-scale-{s}.svg")).exists());
    }

    let mut args = vec!["robustness", "--canonicalizer", "identity"];
    args.extend_from_slice(&common);
    ok(&galign(&b, &args));
    let identity = cells(&b);
    let manifest = json(&b.join("robustness.json"));
    let id_acc = manifest["identity_accuracy"].as_f64().unwrap();
    assert_eq!(id_acc, identity[0].1);
    assert!(identity.iter().all(|(_, acc)| *acc <= id_acc));
    assert!(manifest["mean_off_identity_accuracy"].as_f64().unwrap() < id_acc);
}

#[test]
fn frechet_reads_stdin_and_files() {
    let out = galign_stdin(&["frechet", "--manifold", "so2"], "0.1\n-0.1 # comment\n\n0.3, 2\n");
    let report: serde_json::Value = serde_json::from_slice(&ok(&out).stdout).unwrap();
    assert_eq!(report["n"], 3);
    assert!((report["mean"][0].as_f64().unwrap() - 0.15).abs() < 1e-12);
    assert!((report["variance"].as_f64().unwrap() - 0.0275).abs() < 1e-12);

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("poses.txt");
    std::fs::write(&path, "0 0\n1.0 0.1\n").unwrap();
    let out = galign_stdin(
        &["frechet", path.to_str().unwrap(), "--manifold", "so2*logscale:0.5:2"],
        "",
    );
    let report: serde_json::Value = serde_json::from_slice(&ok(&out).stdout).unwrap();
    assert_eq!(report["mean"].as_array().unwrap().len(), 2);

    let out = galign_stdin(&["frechet", "--manifold", "so2"], "0.1 0.2 0.3\n");
    assert_eq!(out.status.code(), Some(2));
    let out = galign_stdin(&["frechet", "--manifold", "so2"], "");
    assert_eq!(out.status.code(), Some(2));
}
