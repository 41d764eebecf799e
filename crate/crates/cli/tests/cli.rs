use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Days, NaiveDate};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tdaindex"));
    cmd.env_remove("TDA_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn day(i: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 1).unwrap() + Days::new(i)
}

/// Deterministic wiggly price path.
fn wiggle(n: usize, phase: f64) -> Vec<f64> {
    let mut p = 100.0;
    (0..n)
        .map(|i| {
            let t = i as f64 + phase;
            p *= (0.01 * (t * 0.7).sin() + 0.006 * (t * 1.9).cos() + 0.0002).exp();
            p
        })
        .collect()
}

fn write_prices(dir: &Path, name: &str, start: u64, closes: &[f64]) -> PathBuf {
    let mut text = String::from("date,close\n");
    for (i, c) in closes.iter().enumerate() {
        text.push_str(&format!("{},{}\n", day(start + i as u64), c));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn write_index(dir: &Path, name: &str, start: u64, values: &[f64]) -> PathBuf {
    let mut text = String::from("date,value\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{}\n", day(start + i as u64), v));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

fn json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

#[test]
fn constant_series_gives_zero_index() {
    let tmp = TempDir::new().unwrap();
    let input = write_prices(tmp.path(), "flat.csv", 0, &[50.0; 120]);
    let out = tmp.path().join("out");
    ok(&["index", "-i", s(&input), "-o", s(&out), "--d", "3", "--tau", "2", "--w", "30", "--lag", "5", "--dim", "1"]);
    let csv = read(out.join("idx_d3_tau2_w30_T5_dim1.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("date,value"));
    let values: Vec<&str> = lines.map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values.len(), 119 - (2 * 2 + 30 + 5) + 1);
    assert!(values.iter().all(|v| *v == "0"));
    let manifest = json(out.join("manifest.json"));
    assert_eq!(manifest["command"], "index");
    assert_eq!(manifest["series"][0]["rows"], values.len());
}

#[test]
fn grid_writes_one_file_per_config() {
    let tmp = TempDir::new().unwrap();
    let input = write_prices(tmp.path(), "a.csv", 0, &wiggle(90, 0.0));
    let out = tmp.path().join("out");
    let stdout = ok(&[
        "index", "-i", s(&input), "-o", s(&out), "--d", "3", "--tau", "1,2", "--w", "20", "--lag", "1,5", "--dim", "0,1",
    ])
    .stdout;
    let idx: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.unwrap().file_name().into_string().ok())
        .filter(|n| n.starts_with("idx_"))
        .collect();
    assert_eq!(idx.len(), 8);
    assert_eq!(json(out.join("manifest.json"))["series"].as_array().unwrap().len(), 8);
    assert_eq!(String::from_utf8(stdout).unwrap().lines().count(), 9);
}

#[test]
fn missing_input_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["index", "-i", s(&tmp.path().join("nope.csv")), "-o", s(&tmp.path().join("out"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("nope.csv"), "{}", stderr(&out));
    assert!(!tmp.path().join("out/manifest.json").exists());
}

#[test]
fn too_short_series_names_the_config() {
    let tmp = TempDir::new().unwrap();
    let input = write_prices(tmp.path(), "a.csv", 0, &wiggle(40, 0.0));
    let out = run(&["index", "-i", s(&input), "-o", s(&tmp.path().join("o")), "--d", "3", "--tau", "1", "--w", "30", "--lag", "15", "--dim", "0"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("d3_tau1_w30_T15_dim0"), "{}", stderr(&out));
}

fn pipeline(tmp: &Path, out: &Path) {
    let input = write_prices(tmp, "a.csv", 0, &wiggle(110, 0.3));
    ok(&["index", "-i", s(&input), "-o", s(out), "--d", "3,4", "--tau", "1", "--w", "25", "--lag", "1,5", "--dim", "0,1"]);
    ok(&["cluster", "--indices-dir", s(out), "-o", s(&out.join("cluster")), "--k-max", "6"]);
    ok(&["ews", "-i", s(&input), "-o", s(&out.join("ews"))]);
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            for (name, bytes) in tree(&path) {
                files.push((format!("{}/{name}", path.file_name().unwrap().to_string_lossy()), bytes));
            }
        } else {
            files.push((path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap()));
        }
    }
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(tmp.path(), &a);
    pipeline(tmp.path(), &b);
    let (ta, tb) = (tree(&a), tree(&b));
    assert!(ta.len() > 10);
    assert_eq!(ta, tb);
    // rerunning into the same directory is idempotent too
    pipeline(tmp.path(), &a);
    assert_eq!(tree(&a), tb);
}

#[test]
fn cluster_duplicates_and_k_errors() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("idx");
    fs::create_dir(&dir).unwrap();
    let values: Vec<f64> = (0..30).map(|i| ((i as f64) * 0.4).sin()).collect();
    for i in 0..10 {
        write_index(&dir, &format!("idx_copy{i}.csv"), 0, &values);
    }
    let out = tmp.path().join("out");
    ok(&["cluster", "--indices-dir", s(&dir), "-o", s(&out), "--k", "1"]);
    let report = read(out.join("clusters.csv"));
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.ends_with(",0,0")), "{report}");
    for f in ["centroids.csv", "pca.csv", "inertia.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let bad = run(&["cluster", "--indices-dir", s(&dir), "-o", s(&out), "--k", "11"]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("11"), "{}", stderr(&bad));
}

#[test]
fn cluster_average_of_designated_cluster() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("idx");
    fs::create_dir(&dir).unwrap();
    let up: Vec<f64> = (0..20).map(f64::from).collect();
    let down: Vec<f64> = (0..20).map(|i| -f64::from(i)).collect();
    for i in 0..3 {
        write_index(&dir, &format!("idx_up{i}.csv"), 0, &up);
        write_index(&dir, &format!("idx_down{i}.csv"), 0, &down);
    }
    let out = tmp.path().join("out");
    ok(&["cluster", "--indices-dir", s(&dir), "-o", s(&out), "--k", "2", "--average-cluster", "0"]);
    let avg = read(out.join("average_index.csv"));
    let vals: Vec<f64> = avg.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vals.len(), 20);
    assert!(vals[0] == 0.0 || vals[0] == 1.0);
}

#[test]
fn seed_from_environment_and_config_precedence() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("idx");
    fs::create_dir(&dir).unwrap();
    for i in 0..4 {
        write_index(&dir, &format!("idx_{i}.csv"), 0, &wiggle(15, i as f64));
    }
    let config = tmp.path().join("run.json");
    let cfg_out = tmp.path().join("from_config");
    fs::write(&config, format!(r#"{{"out": "{}", "seed": 5, "cluster": {{"k": 2}}}}"#, s(&cfg_out))).unwrap();

    ok(&["--config", s(&config), "cluster", "--indices-dir", s(&dir)]);
    let m = json(cfg_out.join("manifest.json"));
    assert_eq!((m["seed"].as_u64(), m["k"].as_u64()), (Some(5), Some(2)));

    let out = bin()
        .env("TDA_SEED", "7")
        .args(["--config", s(&config), "cluster", "--indices-dir", s(&dir), "--k", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let m = json(cfg_out.join("manifest.json"));
    assert_eq!((m["seed"].as_u64(), m["k"].as_u64()), (Some(7), Some(3)));

    let flag_out = tmp.path().join("flag");
    let out = bin()
        .env("TDA_SEED", "7")
        .args(["--config", s(&config), "--seed", "9", "-o", s(&flag_out), "cluster", "--indices-dir", s(&dir)])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(flag_out.join("manifest.json"))["seed"].as_u64(), Some(9));
}

#[test]
fn config_supplies_grid_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    let input = write_prices(tmp.path(), "a.csv", 0, &wiggle(80, 0.0));
    let config = tmp.path().join("run.json");
    fs::write(
        &config,
        format!(r#"{{"input": {{"inputs": ["{}"]}}, "index": {{"d": [3], "tau": [1], "w": [20], "T": [5], "dim": [0]}}}}"#, s(&input)),
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok(&["--config", s(&config), "-o", s(&out), "index"]);
    assert!(out.join("idx_d3_tau1_w20_T5_dim0.csv").exists());
    ok(&["--config", s(&config), "-o", s(&out), "index", "--d", "4"]);
    assert!(out.join("idx_d4_tau1_w20_T5_dim0.csv").exists());

    fs::write(&config, r#"{"index": {"bogus": 1}}"#).unwrap();
    assert!(!run(&["--config", s(&config), "index"]).status.success());
}

#[test]
fn ews_defaults_and_flat_series() {
    let tmp = TempDir::new().unwrap();
    let input = write_prices(tmp.path(), "flat.csv", 0, &[10.0; 150]);
    let out = tmp.path().join("out");
    ok(&["ews", "-i", s(&input), "-o", s(&out)]);
    let report = json(out.join("ews.json"));
    assert_eq!((report["d"].as_u64(), report["w"].as_u64()), (Some(4), Some(50)));
    assert_eq!(report["verdict"]["classification"], "none");
    let c1 = read(out.join("c1.csv"));
    assert!(c1.starts_with("date,log_price,c1,x,y\n"));
    assert_eq!(c1.lines().count() - 1, 149 - 3 - 50);
}

#[test]
fn ews_growing_oscillation_is_strong() {
    let tmp = TempDir::new().unwrap();
    let mut closes = vec![100.0];
    for i in 0..300usize {
        let r = if i < 200 {
            0.002 * ((i as f64) * 2.3).sin()
        } else {
            let k = (i - 200) as f64;
            0.002 + 0.03 * (k / 40.0).min(1.0) * (std::f64::consts::TAU * k / 10.0).sin()
        };
        closes.push(closes.last().unwrap() * f64::exp(r));
    }
    let input = write_prices(tmp.path(), "ramp.csv", 0, &closes);
    let out = tmp.path().join("out");
    ok(&["ews", "-i", s(&input), "-o", s(&out)]);
    assert_eq!(json(out.join("ews.json"))["verdict"]["classification"], "strong");
}

/// Daily prices and a daily index over the same ~8 years.
fn backtest_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let n = 8 * 365;
    let prices = write_prices(dir, "spx.csv", 0, &wiggle(n, 0.0));
    let values: Vec<f64> = (0..n).map(|i| ((i as f64) / 45.0).sin() + (i as f64 / 700.0)).collect();
    let index = write_index(dir, "phti.csv", 0, &values);
    (prices, index)
}

#[test]
fn backtest_reports() {
    let tmp = TempDir::new().unwrap();
    let (prices, index) = backtest_inputs(tmp.path());
    let out = tmp.path().join("bh");
    ok(&["backtest", "-i", s(&prices), "-o", s(&out), "--strategy", "buy-and-hold"]);
    let report = read(out.join("report.csv"));
    let labels: Vec<&str> = report.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["measure", "mu", "sigma", "SR", "maxDD"]);

    let out = tmp.path().join("all");
    ok(&["backtest", "-i", s(&prices), "--index", s(&index), "-o", s(&out)]);
    let report = read(out.join("report.csv"));
    assert_eq!(report.lines().next(), Some("measure,buy_and_hold,protection,flexible,leverage"));
    for kind in ["buy_and_hold", "protection", "flexible", "leverage"] {
        assert!(out.join(format!("equity_{kind}.csv")).exists());
    }
    let m = json(out.join("manifest.json"));
    assert_eq!(m["months"].as_u64(), Some(8 * 12 - 60));
}

#[test]
fn backtest_rejects_gappy_index() {
    let tmp = TempDir::new().unwrap();
    let (prices, _) = backtest_inputs(tmp.path());
    let mut text = String::from("date,value\n");
    for i in 0..8 * 365u64 {
        // the whole of the third year is missing
        if !(730..1095).contains(&i) {
            text.push_str(&format!("{},{}\n", day(i), (i % 17) as f64));
        }
    }
    let index = tmp.path().join("gappy.csv");
    fs::write(&index, text).unwrap();
    let out = run(&["backtest", "-i", s(&prices), "--index", s(&index), "-o", s(&tmp.path().join("o"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).to_lowercase().contains("misalign"), "{}", stderr(&out));
}

#[test]
fn plotdata_join_and_svg() {
    let tmp = TempDir::new().unwrap();
    let prices = write_prices(tmp.path(), "p.csv", 0, &wiggle(100, 0.0));
    let index = write_index(tmp.path(), "i.csv", 40, &vec![0.5; 100]);
    let out = tmp.path().join("out");
    ok(&["plotdata", "-i", s(&prices), "--index", s(&index), "-o", s(&out), "--svg", "--crash-date", &day(70).to_string()]);
    let csv = read(out.join("plot.csv"));
    assert!(csv.starts_with("date,price,index_value\n"));
    assert_eq!(csv.lines().count() - 1, 60);
    let svg = read(out.join("plot.svg"));
    assert_eq!(svg.matches("stroke-dasharray").count(), 1);
    assert!(svg.contains(r#"stroke="green""#) && svg.contains(r#"stroke="blue""#) && svg.contains(r#"stroke="red""#));

    let far = write_index(tmp.path(), "far.csv", 500, &[1.0; 10]);
    let bad = run(&["plotdata", "-i", s(&prices), "--index", s(&far), "-o", s(&out)]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("no common dates") || stderr(&bad).to_lowercase().contains("intersection"), "{}", stderr(&bad));
}

#[test]
fn ingest_aligns_assets() {
    let tmp = TempDir::new().unwrap();
    let a = write_prices(tmp.path(), "a.csv", 0, &wiggle(50, 0.0));
    let b = write_prices(tmp.path(), "b.csv", 10, &wiggle(50, 1.0));
    let out = tmp.path().join("out");
    ok(&["ingest", "-i", s(&a), "-i", s(&b), "-o", s(&out), "--simple-returns"]);
    let ra = read(out.join("returns_a.csv"));
    let rb = read(out.join("returns_b.csv"));
    assert_eq!(ra.lines().count(), 40);
    let dates = |t: &str| t.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(dates(&ra), dates(&rb));
    assert_eq!(json(out.join("manifest.json"))["return_kind"], "simple");
}

#[test]
fn ingest_forward_fill() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("gap.csv");
    fs::write(&path, "date,close\n2020-01-01,10\n2020-01-02,\n2020-01-03,11\n").unwrap();
    let out = tmp.path().join("out");
    assert!(!run(&["ingest", "-i", s(&path), "-o", s(&out)]).status.success());
    ok(&["ingest", "-i", s(&path), "-o", s(&out), "--forward-fill"]);
    assert_eq!(read(out.join("returns_gap.csv")).lines().nth(1), Some("2020-01-02,0"));
}

#[test]
fn multi_asset_pipelines() {
    let tmp = TempDir::new().unwrap();
    let inputs: Vec<PathBuf> = (0..3).map(|k| write_prices(tmp.path(), &format!("a{k}.csv"), 0, &wiggle(140, k as f64 * 0.9))).collect();
    let mut args: Vec<&str> = vec!["index"];
    for p in &inputs {
        args.extend(["-i", s(p)]);
    }
    let out = tmp.path().join("out");
    let with = |extra: &[&'static str]| {
        let mut a = args.clone();
        a.extend(["-o", s(&out)]);
        a.extend(extra);
        a
    };
    ok(&with(&["--pipeline", "phti", "--dim", "0"]));
    assert!(out.join("phti_N3_dim0.csv").exists() && out.join("phti_raw_N3_dim0.csv").exists());
    ok(&with(&["--pipeline", "correlation"]));
    assert!(out.join("corrgraph_T15_dim0.csv").exists());
    ok(&with(&["--pipeline", "landscape-norm", "--window", "40", "--variance-window", "20"]));
    assert!(out.join("landscape_L1_w40.csv").exists() && out.join("landscape_L1_w40_mvar20.csv").exists());
}
