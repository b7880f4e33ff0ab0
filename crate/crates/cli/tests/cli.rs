use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64;
use risfad::scenario::demo_scenario;
use risfad::{EigenBasis, InteractionMatrix, RisConfiguration};
use tempfile::TempDir;

fn risfad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risfad")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Parsed channel CSV rows: leading key columns as text, then (re, im).
fn channel_rows(csv: &str) -> Vec<(Vec<String>, Complex64)> {
    let mut lines = csv.lines();
    lines.next().expect("header");
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let n = f.len();
            let v = Complex64::new(f[n - 2].parse().unwrap(), f[n - 1].parse().unwrap());
            (f[..n - 2].iter().map(|s| s.to_string()).collect(), v)
        })
        .collect()
}

fn max_rel_diff(a: &str, b: &str) -> f64 {
    let (a, b) = (channel_rows(a), channel_rows(b));
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let scale = a.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    a.iter()
        .zip(&b)
        .map(|((ka, va), (kb, vb))| {
            assert_eq!(ka, kb);
            (va - vb).norm() / scale
        })
        .fold(0.0, f64::max)
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn channel_header_and_shape() {
    let o = risfad(&["channel", "--freq-index", "0..2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("freq_ghz,realization,rx,tx,re,im"));
    let sc = demo_scenario();
    assert_eq!(channel_rows(&out).len(), 2 * sc.rx.len() * sc.tx.len());
}

#[test]
fn malformed_scenario_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{ \"tx\": [ ");
    let o = risfad(&["channel", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json"), "{}", stderr(&o));

    let missing = dir.path().join("missing.json");
    let o = risfad(&["--scenario", missing.to_str().unwrap(), "channel"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resonant_shift_is_a_numerical_failure() {
    let sc = demo_scenario();
    let map = sc.build_index_map().unwrap();
    let f = sc.freq_grid.points()[0];
    let wm = InteractionMatrix::assemble(&sc, &map, f, &RisConfiguration::zeros(sc.ris.len())).unwrap();
    let ev = EigenBasis::new(&wm).unwrap().precompute().eigenvalues()[0];
    let lambda = format!("{},{}", ev.re, ev.im);
    let o = risfad(&["sweep-lambda", "--freq-index", "0", "--lambda", "0,0", "--lambda", &lambda]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn validate_exit_codes() {
    let o = risfad(&["validate", "--instances", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let o = risfad(&["validate", "--instances", "2", "--inject-fault", "1e-3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn oracle_path_agrees_with_default() {
    let bits: String = (0..demo_scenario().ris.len()).map(|i| if i % 3 == 0 { '1' } else { '0' }).collect();
    let fast = risfad(&["channel", "--bits", &bits]);
    let slow = risfad(&["--oracle", "channel", "--bits", &bits]);
    assert!(fast.status.success() && slow.status.success(), "{}", stderr(&fast));
    assert!(max_rel_diff(&stdout(&fast), &stdout(&slow)) <= 1e-10);
}

#[test]
fn scratch_sweeps_agree_with_fast_sweeps() {
    let dir = TempDir::new().unwrap();
    let out_fast = dir.path().join("fast.csv");
    let out_slow = dir.path().join("slow.csv");
    let run = |extra: &[&str], out: &Path| {
        let mut args = vec!["--seed", "5", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["sweep-config", "--freq-index", "0..2", "--random", "6"]);
        let o = risfad(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(out).unwrap()
    };
    let fast = run(&[], &out_fast);
    let slow = run(&["--scratch"], &out_slow);
    assert!(max_rel_diff(&fast, &slow) <= 1e-9);

    let lambdas = write(&dir, "lambdas.txt", "# shifts\n0,0\n0.05,-0.02\n-0.1,0.03\n");
    let a = risfad(&["sweep-lambda", "--freq-index", "1", "--lambda-file", &lambdas]);
    let b = risfad(&["--scratch", "sweep-lambda", "--freq-index", "1", "--lambda-file", &lambdas]);
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    assert!(max_rel_diff(&stdout(&a), &stdout(&b)) <= 1e-8);
}

#[test]
fn trajectory_collision_names_its_index() {
    let sc = demo_scenario();
    let rx = sc.rx[0].pos;
    let tx = sc.tx[0].pos;
    let dir = TempDir::new().unwrap();
    let text = format!("x,y\n{},{}\n{},{}\n{},{}\n{},{}\n", rx.x + 0.05, rx.y, rx.x + 0.1, rx.y, rx.x, rx.y + 0.07, tx.x, tx.y);
    let positions = write(&dir, "path.csv", &text);
    let o = risfad(&["trajectory", "--freq-index", "0", "--dipole", "rx:0", "--positions", &positions]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("position #3"), "{}", stderr(&o));

    let ok = write(&dir, "ok.csv", &text.lines().take(4).collect::<Vec<_>>().join("\n"));
    let fast = risfad(&["trajectory", "--freq-index", "0", "--dipole", "rx:0", "--positions", &ok]);
    let slow = risfad(&["--scratch", "trajectory", "--freq-index", "0", "--dipole", "rx:0", "--positions", &ok]);
    assert!(fast.status.success(), "{}", stderr(&fast));
    assert_eq!(stdout(&fast).lines().next(), Some("freq_ghz,realization,x,y,rx,tx,re,im"));
    assert!(max_rel_diff(&stdout(&fast), &stdout(&slow)) <= 1e-8);
}

#[test]
fn bench_writes_json_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.json");
    let o = risfad(&[
        "--out",
        out.to_str().unwrap(),
        "bench",
        "--synthetic",
        "80",
        "--realizations",
        "5",
        "--baseline-realizations",
        "1",
        "--oracle-samples",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: risfad_cli::bench::BenchReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.n, 80);
    assert_eq!(report.rows.len(), 4);
    assert!(stderr(&o).contains("speedup"));
}
