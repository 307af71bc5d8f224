use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ustat(args: &[&str]) -> Output {
    ustat_env(args, &[])
}

fn ustat_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ustat"));
    cmd.args(args).env_remove("USTAT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read(p: &str) -> String {
    std::fs::read_to_string(Path::new(p)).unwrap()
}

#[test]
fn simulate_single_cell() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    let args = ["simulate", "--nu", "1.5", "--n", "50:50:50", "--schemes", "complete", "--M", "1", "--seed", "7", "--out", &out];
    let o = ustat(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "nu,scheme,n_rule,n,N,M,l1,theta,seed");
    assert!(lines[1].starts_with("1.5000000000000000e0,complete,full,50,1225,1,"), "{}", lines[1]);
    assert!(lines[1].ends_with(",7"));
    // the resolved configuration, seed included, goes to stderr
    assert!(stderr(&o).contains("seed=7"), "{}", stderr(&o));

    let o = ustat(&args);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&out), text);
}

#[test]
fn simulate_is_independent_of_worker_count() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for t in ["1", "3"] {
        let out = path(&dir, &format!("r{t}.csv"));
        let o = ustat_env(
            &["simulate", "--nu", "1.5,4.1", "--n", "20:40:20", "--M", "30", "--seed", "3", "--out", &out],
            &[("USTAT_THREADS", t)],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stderr(&o).contains(&format!("threads={t}")));
        outputs.push(read(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].lines().count(), 1 + 2 * 2 * 10);
}

#[test]
fn full_grid_and_figure() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "all.csv");
    let o = ustat(&["simulate", "--M", "1", "--seed", "11", "--out", &csv]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(&csv).lines().count(), 1 + 320);

    let svg = path(&dir, "fig.svg");
    let o = ustat(&["plot", "--in", &csv, "--out", &svg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(&svg);
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("class=\"panel\"").count(), 4);
    assert_eq!(text.matches("<polyline").count(), 40);

    let o = ustat(&["plot", "--in", &csv, "--out", &svg, "--nu", "1.5"]);
    assert_eq!(code(&o), 0);
    let text = read(&svg);
    assert_eq!(text.matches("class=\"panel\"").count(), 1);
    assert_eq!(text.matches("<polyline").count(), 10);
}

#[test]
fn plot_input_errors() {
    let dir = TempDir::new().unwrap();
    let svg = path(&dir, "fig.svg");
    let empty = path(&dir, "empty.csv");
    std::fs::write(&empty, "nu,scheme,n_rule,n,N,M,l1,theta,seed\n").unwrap();
    let o = ustat(&["plot", "--in", &empty, "--out", &svg]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no rows"));

    let bad = path(&dir, "bad.csv");
    std::fs::write(
        &bad,
        "nu,scheme,n_rule,n,N,M,l1,theta,seed\n\
         1.5,complete,full,50,1225,1,0.5,3.4,7\n\
         1.5,swor,n32,50,354,1,not-a-number,3.4,7\n",
    )
    .unwrap();
    let o = ustat(&["plot", "--in", &bad, "--out", &svg]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    std::fs::write(&bad, "nu,scheme,n,N\n").unwrap();
    let o = ustat(&["plot", "--in", &bad, "--out", &svg]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn theta_values() {
    let o = ustat(&["theta", "--dist", "uniform"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "0.3333333333");
    let o = ustat(&["theta", "--dist", "normal", "--tol", "1e-12"]);
    assert_eq!(stdout(&o).trim(), "1.128379167");
    let o = ustat(&["theta", "--dist", "t", "--nu", "1.5", "--kernel", "absdiff"]);
    assert_eq!(code(&o), 0);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 3.412_638_735).abs() < 1e-9);
    assert!(stderr(&o).contains("kernel=absdiff"));
    assert_eq!(code(&ustat(&["theta", "--dist", "t"])), 1);
    assert_eq!(code(&ustat(&["theta", "--dist", "t", "--nu", "0.8"])), 1);
    assert_eq!(code(&ustat(&["theta", "--dist", "normal", "--kernel", "variance"])), 1);
}

#[test]
fn verify_sampling_reports() {
    let o = ustat(&["verify-sampling", "--n", "6", "--l", "2", "--N", "5", "--scheme", "swor", "--draws", "100000", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("result: PASS"));
    assert_eq!(text.matches("bound ").count(), 4);

    let o = ustat(&["verify-sampling", "--n", "6", "--l", "2", "--N", "5", "--scheme", "bern", "--draws", "100000", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let cov = stdout(&o).lines().find(|l| l.starts_with("covariance")).unwrap().to_string();
    let fields: Vec<&str> = cov.split_whitespace().collect();
    assert_eq!(fields[1].parse::<f64>().unwrap(), 0.0);
    assert!(fields[2].parse::<f64>().unwrap().abs() < 1e-2);
    assert!(cov.ends_with("PASS"));

    let o = ustat(&["verify-sampling", "--n", "6", "--l", "2", "--N", "16", "--scheme", "swor"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&ustat(&["verify-sampling", "--n", "2", "--l", "3", "--N", "1", "--scheme", "swr"])), 1);
}

#[test]
fn decompose_matches_simulate() {
    let dir = TempDir::new().unwrap();
    let t = path(&dir, "t.csv");
    let o = ustat(&[
        "decompose", "--nu", "1.5", "--n", "60", "--scheme", "swor", "--n-rule", "n", "--M", "200", "--c-grid",
        "1:1e9:geometric", "--seed", "5", "--out", &t,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(&t);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "c,t1,t2,t3,t4,sum_check");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r[3] == 0.0));
    let last = rows.last().unwrap();
    assert_eq!(last[1], 0.0);
    assert!(rows.windows(2).all(|w| w[1][4] < w[0][4]));

    let r = path(&dir, "r.csv");
    let o = ustat(&[
        "simulate", "--nu", "1.5", "--n", "60", "--schemes", "swor", "--n-rules", "n", "--M", "200", "--seed", "5",
        "--out", &r,
    ]);
    assert_eq!(code(&o), 0);
    let l1: f64 = read(&r).lines().nth(1).unwrap().split(',').nth(6).unwrap().parse().unwrap();
    for row in &rows {
        assert!((row[5] - l1).abs() < 1e-12, "{} vs {l1}", row[5]);
    }
}

#[test]
fn usage_and_runtime_errors() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.csv");
    assert_eq!(code(&ustat(&["simulate", "--n", "50:400", "--out", &out])), 1);
    assert_eq!(code(&ustat(&["simulate", "--nu", "1.5", "--n", "50", "--bogus", "1", "--out", &out])), 1);
    assert_eq!(code(&ustat(&["simulate", "--schemes", "srs", "--out", &out])), 1);
    assert_eq!(code(&ustat(&["simulate", "--nu", "1.0", "--n", "50", "--out", &out])), 1);
    assert_eq!(code(&ustat(&["frobnicate"])), 1);
    assert_eq!(code(&ustat_env(&["simulate", "--out", &out], &[("USTAT_THREADS", "zero")])), 1);
    let unwritable = dir.path().join("missing").join("x.csv");
    let o = ustat(&["simulate", "--nu", "1.5", "--n", "50", "--M", "1", "--out", unwritable.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = ustat(&["plot", "--in", &path(&dir, "absent.csv"), "--out", &out]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&ustat(&["decompose", "--nu", "1.5", "--n", "50", "--scheme", "complete", "--n-rule", "full"])), 1);
    assert_eq!(code(&ustat(&["--help"])), 0);
}
