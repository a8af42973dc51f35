use std::path::Path;
use std::process::{Command, Output};

fn mlplast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlplast")).args(args).output().expect("binary runs")
}

fn summary_value(stdout: &[u8], key: &str) -> String {
    String::from_utf8_lossy(stdout)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in output"))
}

#[test]
fn elastic_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mlplast(&["--case", "elastic", "--h", "6", "--out", out.to_str().unwrap(), "--export-matrix"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary_value(&o.stdout, "case"), "elastic");
    assert_eq!(summary_value(&o.stdout, "picard_iterations_total"), "1");
    for f in ["fields.csv", "summary.txt", "trace.csv", "nodes.csv", "comparison.csv", "matrix.mtx"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let mtx = std::fs::read_to_string(out.join("matrix.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real general"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "# cylinder\ncase = elastic\npressure = 0.04\nh = 8\n").unwrap();
    let out = dir.path().join("out");
    let o = mlplast(&["--config", file.to_str().unwrap(), "--pressure", "0.03", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary_value(&o.stdout, "pressure_GPa"), "0.03");
    assert_eq!(summary_value(&o.stdout, "h_mm"), "8");
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "case = elastic\nstencil_radius = 3\n").unwrap();
    let cases: [&[&str]; 5] = [
        &["--case", "no-such-case"],
        &["--case", "elastic", "--h", "-1"],
        &["--config", bad.to_str().unwrap()],
        &["--config", "/nonexistent/run.cfg"],
        &["--case", "elastic", "--sweep", "h=4"],
    ];
    for args in cases {
        let o = mlplast(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(mlplast(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(mlplast(&["--help"]).status.code(), Some(0));
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("capped.cfg");
    std::fs::write(&file, "case = perfect-plastic\nmax_picard_iterations = 2\n").unwrap();
    let out = dir.path().join("out");
    let o = mlplast(&["--config", file.to_str().unwrap(), "--h", "8", "--n-load", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Picard"));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = mlplast(&["--case", "elastic", "--h", "8", "--sweep", "seed=1..3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary_value(&o.stdout, "failed_runs"), "0");
    let csv = std::fs::read_to_string(Path::new(&out).join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("seed,"));
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
}
