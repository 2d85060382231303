use std::path::Path;
use std::process::{Command, Output};

use miscible::io::TIMESERIES_HEADER;

fn miscible(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miscible")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn misspelled_key_exits_with_config_category_and_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[physics]\nviscocity = 1.0\n");
    let out_dir = dir.path().join("out");
    let o = miscible(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[config]:"), "{err}");
    assert!(err.contains("physics.viscocity") && err.contains("did you mean `viscosity`"), "{err}");
}

#[test]
fn unknown_section_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[physic]\nviscosity = 1.0\n");
    let o = miscible(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `physics`"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = miscible(&["run", "--config", "/nonexistent/cfg.toml", "--out", "/tmp/never"]);
    assert_eq!(o.status.code(), Some(7));
    assert!(stderr(&o).starts_with("error[io]:"));
}

#[test]
fn stability_refuses_law_violating_monotonicity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "[friction]\nm1 = 0.1\n[discretization]\nnx = 4\nny = 4\nt_end = 0.02\n",
    );
    let o = miscible(&["stability", "--config", &cfg, "--delta", "0.01"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).starts_with("error[hypothesis]:"), "{}", stderr(&o));
}

#[test]
fn laws_prints_odd_mollified_traction() {
    let o = miscible(&["laws", "--law", "sawtooth", "--m", "16", "--samples", "5"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(text.lines().next(), Some("s,Dj_m,clarke_lo,clarke_hi"));
    assert_eq!(rows.len(), 5);
    for (a, b) in rows.iter().zip(rows.iter().rev()) {
        assert_eq!(a[0], -b[0]);
        assert_eq!(a[1], -b[1]);
    }
    assert_eq!(rows[2][1], 0.0);
    assert_eq!((rows[2][2], rows[2][3]), (-1.0, 1.0));
}

#[test]
fn unknown_law_and_case_are_argument_errors() {
    let o = miscible(&["laws", "--law", "coulomb"]);
    assert_eq!(o.status.code(), Some(2));
    let o = miscible(&["verify", "--case", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("available: manufactured, couette, korteweg, quadrature"));
}

#[test]
fn verify_korteweg_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.csv");
    let o = miscible(&["verify", "--case", "korteweg", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("case,direct,weak,relative_difference\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.toml",
        "[discretization]\nnx = 4\nny = 4\nt_end = 0.03\ndt = 0.01\n[output]\nsnapshot_every = 1\n",
    );
    let out = dir.path().join("out");
    let o = miscible(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(TIMESERIES_HEADER));
    assert_eq!(lines.count(), 3);
    for i in 0..=3 {
        assert!(out.join(format!("snapshot_{i:05}.vtk")).exists());
    }
    let echo = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert_eq!(
        miscible::io::parse_config_str(&echo).unwrap(),
        miscible::io::parse_config_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap()
    );
    assert!(out.join("summary.txt").exists());
}
