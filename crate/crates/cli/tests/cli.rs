use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planar-orbits")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV body without the `#` preamble.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn golden_table_is_all_ones() {
    let o = run(&["cf", "--z", "golden", "--depth", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# planar-orbits "));
    let r = rows(&text);
    assert_eq!(r.len(), 41);
    assert!(r[1..].iter().all(|row| row[1] == "1"));
}

#[test]
fn quaternion_cloud() {
    let o = run(&["cloud", "--lattice", "quaternion23", "--u", "1,0", "--T", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert!(r.len() > 50);
    for row in &r {
        let (x, y): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
        assert!(x.abs() <= 4.0 && y.abs() <= 4.0);
    }
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("out");
    for text in [r#"{"T": 50, "speed": 2}"#, r#"{"T": "fifty"}"#, "{", r#"{"t_grid": [100, 50]}"#] {
        std::fs::write(&cfg, text).unwrap();
        let o = run(&["converge", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(o.stdout.is_empty());
        assert!(!out.exists());
    }
    assert_eq!(run(&["cf", "--z", "7/5"]).status.code(), Some(2));
    assert_eq!(run(&["cf", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["cloud", "--config", "/nonexistent/run.json"]).status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"T": 20, "lattice": "sl2z", "u": [0.5, 1.0], "window": {"x0": -2, "x1": 2, "y0": -2, "y1": 2}}"#).unwrap();
    let o = run(&["cloud", "--config", cfg.to_str().unwrap(), "--T", "30", "--workers", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let echo = text.lines().nth(1).unwrap();
    assert!(echo.contains(r#""T":30.0"#) && echo.contains(r#""workers":3"#) && echo.contains(r#""x0":-2.0"#), "{echo}");
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["converge", "--T-grid", "20,40,80", "--f", "bump:3,1,2.5", "--workers", "4", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (fa, fb) = (read_all(&a), read_all(&b));
    assert_eq!(fa.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(), ["converge.csv", "converge.json"]);
    assert_eq!(fa, fb);
    let report: serde_json::Value = serde_json::from_slice(&fa[1].1).unwrap();
    assert_eq!(report["config"]["workers"], 4);
    assert!(report["report"]["mu_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn selftest_passes_and_names_a_corrupted_bump() {
    let o = run(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["selftest", "--corrupt-bump", "1.02"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("boundary_lemma_windows"), "{err}");
    let o = run(&["selftest", "--norm", "frobenius"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("star_sandwiched_by_norms,true"));
}

#[test]
fn target_and_excursion() {
    let o = run(&["target", "--T-grid", "10,50,250"]);
    assert_eq!(o.status.code(), Some(0));
    let d: Vec<f64> = rows(&stdout(&o)).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]));
    let o = run(&["excursion", "--z", "0", "--s2", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let last = rows(&stdout(&o)).last().unwrap().clone();
    let h: f64 = last[1].parse().unwrap();
    assert!((h / 6f64.exp() - 1.0).abs() < 1e-9);
    assert_eq!(run(&["excursion", "--s1", "3", "--s2", "1"]).status.code(), Some(2));
}

#[test]
fn scaling_rejects_alpha_outside_the_range() {
    assert_eq!(run(&["scaling", "--alpha", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["converge", "--alpha", "0.5"]).status.code(), Some(2));
    let o = run(&["scaling", "--alpha", "-0.3", "--T-grid", "50,100"]);
    assert_eq!(o.status.code(), Some(0));
}
