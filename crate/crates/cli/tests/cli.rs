use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_probit-kde"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_sample(path: &Path, n: usize) {
    let text: String = (1..=n)
        .map(|i| {
            let u = i as f64 / (n + 1) as f64;
            format!("{}\n", u * u * (3.0 - 2.0 * u))
        })
        .collect();
    fs::write(path, text).unwrap();
}

const MINIMAL_CONFIG: &str = r#"{
  "densities": ["beta(4,4)"],
  "estimators": ["naive:fixed:nrr"],
  "sampleSizes": [40],
  "replications": 2,
  "masterSeed": 3
}"#;

#[test]
fn out_of_range_value_cites_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    fs::write(&input, "0.2\n0.4\n\n1.2\n0.5\n").unwrap();
    let o = run(&["estimate", "--in", input.to_str().unwrap(), "--out", dir.path().join("est").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    assert!(!dir.path().join("est").exists());
}

#[test]
fn unparsable_value_cites_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    fs::write(&input, "0.2\nzero point three\n").unwrap();
    let o = run(&["select-bandwidth", "--method", "naive", "--in", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn boundary_values_need_clamp() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    let mut text = String::from("0\n1\n");
    for i in 1..60 {
        text.push_str(&format!("{}\n", i as f64 / 60.0));
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("est");
    let args = ["estimate", "--method", "amended", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(run(&args).status.code(), Some(2));
    let mut clamped = args.to_vec();
    clamped.extend(["--clamp", "1e-6"]);
    let o = run(&clamped);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(meta["clampEpsilon"], 1e-6);
}

#[test]
fn estimate_writes_csv_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    write_sample(&input, 56);
    let out = dir.path().join("est");
    let o = run(&[
        "estimate", "--method", "t2", "--bandwidth", "knn", "--select", "wlscv1", "--grid", "99", "--seed", "5",
        "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "--svg",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("estimate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,fhat"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, f) = l.split_once(',').unwrap();
            (x.parse().unwrap(), f.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 99);
    assert!(rows.iter().all(|&(x, f)| x > 0.0 && x < 1.0 && f >= 0.0 && f.is_finite()));

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(meta["estimator"], "t2:knn:wlscv1");
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["n"], 56);
    assert_eq!(meta["selection"]["scheme"], "wlscv1");
    let alpha = meta["parameter"].as_f64().unwrap();
    assert!(alpha > 0.0 && alpha <= 1.0);
    assert_eq!(meta["bandwidth"]["alpha"].as_f64(), Some(alpha));
    assert!((meta["mass"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let svg = fs::read_to_string(out.join("estimate.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("t2:knn:wlscv1"));
}

#[test]
fn fixed_h_naive_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    write_sample(&input, 1000);
    let out = dir.path().join("est");
    let o = run(&["estimate", "--method", "naive", "--h", "0.27", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(meta["estimator"], "naive:fixed:h=0.27");
    assert_eq!(meta["parameter"], 0.27);
    assert_eq!(meta["normalized"], false);
    assert_eq!(fs::read_to_string(out.join("estimate.csv")).unwrap().lines().count(), 1000);
}

#[test]
fn conflicting_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    write_sample(&input, 30);
    let input = input.to_str().unwrap();
    for args in [
        vec!["select-bandwidth", "--in", input, "--h", "0.3", "--alpha", "0.5"],
        vec!["select-bandwidth", "--in", input, "--bandwidth", "knn", "--h", "0.3"],
        vec!["select-bandwidth", "--in", input, "--method", "naive", "--select", "wlscv1"],
        vec!["select-bandwidth", "--in", input, "--method", "raw2", "--select", "wlscv2"],
        vec!["select-bandwidth", "--in", input, "--select", "none"],
        vec!["select-bandwidth", "--in", input, "--method", "bogus"],
        vec!["select-bandwidth", "--in", input, "--clamp", "0.7"],
        vec!["select-bandwidth", "--in", "/nonexistent/file.txt"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn select_bandwidth_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    write_sample(&input, 80);
    let o = run(&["select-bandwidth", "--method", "t1", "--bandwidth", "fixed", "--select", "lscv", "--in", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["estimator"], "t1:fixed:lscv");
    let trace = v["selection"]["trace"].as_array().unwrap();
    assert!(trace.len() >= 25);
    assert!(v["parameter"].as_f64().unwrap() > 0.0);
}

#[test]
fn minimal_bench_config_gives_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    fs::write(&cfg, MINIMAL_CONFIG).unwrap();
    let out = dir.path().join("out");
    let o = run(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("bench.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| &r[6] == "ok"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bench.json")).unwrap()).unwrap();
    assert_eq!(summary["schemaVersion"], 1);
    assert!(fs::read_dir(&out).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}

#[test]
fn bench_seed_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    fs::write(&cfg, MINIMAL_CONFIG).unwrap();
    let outputs: Vec<Vec<u8>> = ["a", "b", "c"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let seed = if *name == "c" { "8" } else { "7" };
            let o = run(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            fs::read(out.join("bench.csv")).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/bench.json")).unwrap()).unwrap();
    assert_eq!(summary["masterSeed"], 7);
}

#[test]
fn bench_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("missing.json");
    let o = run(&["bench", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    for bad in [
        "{ not json",
        r#"{"densities":["uniform"],"estimators":["t2"],"sampleSizes":[10],"replications":0}"#,
        r#"{"densities":["nope"],"estimators":["t2"],"sampleSizes":[10],"replications":1}"#,
        r#"{"densities":["uniform"],"estimators":["t2"],"sampleSizes":[10],"replications":1,"extra":1}"#,
    ] {
        let cfg = dir.path().join("bad.json");
        fs::write(&cfg, bad).unwrap();
        let o = run(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
    }
}

#[test]
fn theory_check_reports_midpoint_and_formulas() {
    let o = run(&["theory-check", "--density", "uniform", "--tag", "naive,amended", "--x", "0.5", "--h", "0.2", "--n", "1000", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[0]["leadingBias"].as_f64().unwrap() + 0.02).abs() < 1e-12);
    assert!((rows[0]["leadingVariance"].as_f64().unwrap() - 0.0035355339).abs() < 1e-9);
    assert_eq!(rows[1]["leadingBias"].as_f64().unwrap(), 0.0);
    assert_eq!(v["midpoint"]["h0Reference"], 2.5679);

    let o = run(&["theory-check", "--density", "beta(4,4)", "--tag", "t1", "--h", "0.3", "--n", "200", "--reps", "20", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("mc_bias") && text.contains("beta(4,4)"));

    assert_eq!(run(&["theory-check", "--density", "uniform", "--tag", "gc", "--alpha", "0.3"]).status.code(), Some(2));
    assert_eq!(run(&["theory-check", "--density", "uniform", "--h", "0.2", "--x", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["theory-check", "--density", "uniform"]).status.code(), Some(2));
}

#[test]
fn help_on_every_subcommand() {
    for sub in [None, Some("estimate"), Some("select-bandwidth"), Some("bench"), Some("theory-check")] {
        let mut args: Vec<&str> = sub.into_iter().collect();
        args.push("--help");
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("--threads"), "{args:?}");
        if matches!(sub, Some("estimate") | Some("select-bandwidth")) {
            for flag in [
                "--method", "--bandwidth", "--h", "--alpha", "--select", "--weight-convention", "--grid", "--clamp", "--seed", "--in",
            ] {
                assert!(text.contains(flag), "{sub:?} lacks {flag}");
            }
            assert!(text.contains("wlscv2"));
        }
        if sub == Some("estimate") {
            assert!(text.contains("--svg") && text.contains("--out"));
        }
    }
}

#[test]
fn missing_required_flag_exits_2() {
    assert_eq!(run(&["estimate", "--out", "/tmp/never"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}
