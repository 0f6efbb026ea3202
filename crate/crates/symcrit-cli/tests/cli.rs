//! End-to-end tests of the `symcrit` binary against the bundled specs:
//! exit codes, CSV schemas and the print-spec round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_symcrit")
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary should run")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.push("--out".into());
    full.push(dir.display().to_string());
    Command::new(bin())
        .args(&full)
        .output()
        .expect("binary should run")
}

#[test]
fn check_consistent_spec_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("ou_canonical.toml");
    let out = run_in(dir.path(), &["check", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("xi,re_S,im_S,abs_S,err_est"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101);
    for row in rows {
        let abs_s: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(abs_s <= 1e-6, "|S| = {abs_s}");
    }

    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("convention: canonical"));
    assert!(stdout.contains("hypothesis notes:"));
    assert!(stdout.contains("does not prove full invariance"));
}

#[test]
fn check_wrong_variance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("ou_wrong_variance.toml");
    let out = run_in(dir.path(), &["check", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // peak value e^{-1} appears in the report near xi = ±1.4
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let max_abs = report
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!((max_abs - (-1.0f64).exp()).abs() < 1e-3, "max {max_abs}");
}

#[test]
fn check_paper_mode_matches_printed_example() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("ou_paper.toml");
    let out = run_in(dir.path(), &["check", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("convention: paper"));
}

#[test]
fn check_levy_bm_is_violated() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("levy_bm.toml");
    let out = run_in(dir.path(), &["check", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_cosh_diffusion_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("cosh_diffusion.toml");
    let out = run_in(dir.path(), &["check", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_toml_exits_sixty_four_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[process\nkind = \"ou\"").unwrap();
    let outdir = tempfile::tempdir().unwrap();
    let out = run_in(outdir.path(), &["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1"), "{stderr}");
    assert!(!outdir.path().join("report.csv").exists());
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[process]\nkind = \"ou\"\nlambda = 1.0\nsigma = 1.0\nbogus = 1\n",
    )
    .unwrap();
    let out = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn print_spec_round_trips() {
    let spec = specs_dir().join("gou_bm.toml");
    let first = run(&["check", spec.to_str().unwrap(), "--print-spec"]);
    assert_eq!(first.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let echoed = dir.path().join("normalized.toml");
    std::fs::write(&echoed, &first.stdout).unwrap();
    let second = run(&["check", echoed.to_str().unwrap(), "--print-spec"]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn fit_recovers_ou_variance() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("ou_canonical.toml");
    let out = run_in(dir.path(), &["fit", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let fit = std::fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    let mut lines = fit.lines();
    assert_eq!(lines.next(), Some("param,objective,iterations,converged"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = row[0].parse().unwrap();
    assert!((v - 0.5).abs() < 1e-2, "v* = {v}");
    assert_eq!(row[3], "true");
}

#[test]
fn fit_stochastic_exponential_does_not_converge() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("stochastic_exponential.toml");
    let out = run_in(dir.path(), &["fit", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let fit = std::fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    assert!(fit.lines().nth(1).unwrap().ends_with("false"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("not an error"));
}

#[test]
fn stationary_density_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("cosh_diffusion.toml");
    let out = run_in(dir.path(), &["stationary-density", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(csv.starts_with("x,pi\n"));
    // the density integrates to about 1 on the exported trapezoid grid
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    let mut integral = 0.0;
    for w in rows.windows(2) {
        integral += 0.5 * (w[1].1 + w[0].1) * (w[1].0 - w[0].0);
    }
    assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
}

#[test]
fn simulate_writes_deterministic_path() {
    let spec = specs_dir().join("ou_canonical.toml");
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let a = run_in(d1.path(), &["simulate", spec.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    let b = run_in(d2.path(), &["simulate", spec.to_str().unwrap()]);
    assert_eq!(b.status.code(), Some(0));
    let pa = std::fs::read_to_string(d1.path().join("path.csv")).unwrap();
    let pb = std::fs::read_to_string(d2.path().join("path.csv")).unwrap();
    assert!(pa.starts_with("t,x\n"));
    assert_eq!(pa, pb);

    // a different seed gives a different path
    let d3 = tempfile::tempdir().unwrap();
    let c = run_in(d3.path(), &["simulate", spec.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(c.status.code(), Some(0));
    let pc = std::fs::read_to_string(d3.path().join("path.csv")).unwrap();
    assert_ne!(pa, pc);
}

#[test]
fn estimate_symbol_tracks_the_exact_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("quick.toml");
    std::fs::write(
        &spec,
        r#"
[process]
kind = "ou"
lambda = 1.0
sigma = 1.0

[grid]
xi_min = -1.0
xi_max = 1.0
n = 5

[simulate]
t = 0.01
n_paths = 4000
x0 = 1.0
seed = 9
"#,
    )
    .unwrap();
    let out = run_in(dir.path(), &["estimate-symbol", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
    assert!(csv.starts_with("xi,re_est,im_est,std_err,re_p,im_p\n"));
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let gap = ((f[1] - f[4]).powi(2) + (f[2] - f[5]).powi(2)).sqrt();
        assert!(gap <= 4.0 * f[3] + 0.05, "xi={} gap {gap} err {}", f[0], f[3]);
    }
}

#[test]
fn threads_flag_and_env_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = specs_dir().join("ou_canonical.toml");
    let out = run_in(dir.path(), &["check", spec.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0));

    let dir2 = tempfile::tempdir().unwrap();
    let out = Command::new(bin())
        .args(["check", spec.to_str().unwrap(), "--out"])
        .arg(dir2.path())
        .env("SYMCRIT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
#[cfg(unix)]
fn closed_stdout_pipe_does_not_panic() {
    let spec = specs_dir().join("ou_canonical.toml");
    let out = Command::new("sh")
        .arg("-c")
        .arg(format!(
            "{} check {} --out {} 2>&1 | head -c 10 > /dev/null",
            bin(),
            spec.display(),
            std::env::temp_dir().display(),
        ))
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(!stderr.contains("panicked"), "{stderr}");
}
