use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn epd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epd"))
        .args(args)
        .output()
        .expect("spawn epd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn series_prints_i0_coefficients() {
    let o = epd(&["series", "--lambda", "0.5", "--nu", "0", "--K", "1", "--N", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n, a_n");
    assert_eq!(lines[3], "2, 2.5000000000000000e-1");
    assert_eq!(lines[5], "4, 1.5625000000000000e-2");
}

#[test]
fn series_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.txt");
    let o = epd(&[
        "series",
        "--lambda",
        "0.25",
        "--nu",
        "0",
        "--K",
        "-2",
        "--N",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 8);
}

#[test]
fn resonant_series_exits_with_error() {
    let o = epd(&["series", "--lambda", "-0.5", "--nu", "0", "--K", "1", "--N", "6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n = 2"));
}

#[test]
fn missing_j_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "alpha = 0.25\n");
    let o = epd(&["solve", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`J`"));
}

#[test]
fn unknown_key_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "J = 24\nsolverr = x\n");
    let o = epd(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn validate_passes_on_benchmark_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "J = 24\n");
    let o = epd(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("[PASS]").count(), 7);
}

#[test]
fn validate_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "J = 24\nlambda = 0.5\ngamma = -0.5\n");
    let o = epd(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("[FAIL]"));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let cfg = write_config(dir.path(), "J = 4, 9\nsolver = both\n");
    let o = epd(&["bench", &cfg, "--out", csv.to_str().unwrap(), "--repeats", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("J,h,l,Er_II,RelEr_II,Er_I,RelEr_I,time_II_ms,time_I_ms,ratio")
    );
    assert!(lines.next().unwrap().starts_with("4,4,8,"));
    assert!(lines.next().unwrap().starts_with("9,2,"));
}

#[test]
fn solve_reports_each_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "J = 9\nsolver = both\n");
    let o = epd(&["solve", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("sylvester"));
    assert!(text.contains("kronecker"));
}

#[test]
fn converge_needs_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "J = 24\n");
    let o = epd(&["converge", &cfg, "--J", "9,24"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 3"));
}

#[test]
fn converge_reports_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "J = 9, 19, 39\n");
    let o = epd(&["converge", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("order = "));
}

#[test]
fn bad_j_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "J = 24\n");
    let o = epd(&["converge", &cfg, "--J", "24,x"]);
    assert_eq!(o.status.code(), Some(2));
}
