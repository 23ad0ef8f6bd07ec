use std::path::{Path, PathBuf};
use std::process::Command;

use num_complex::Complex64;
use tempfile::TempDir;

fn run(dir: &Path, config: &str) -> i32 {
    let path = dir.join("run.cfg");
    std::fs::write(&path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uzawa-ritz"))
        .arg(&path)
        .env_remove("UZAWA_RITZ_SEED")
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn out_dir(dir: &Path) -> PathBuf {
    dir.join("out")
}

fn with_out(dir: &Path, body: &str) -> String {
    format!("output_dir = {}\n{body}", out_dir(dir).display())
}

fn read(dir: &Path, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(out_dir(dir).join(name)).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn solve_with_defaults() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), &with_out(d.path(), "command = solve\n")), 0);
    let (header, rows) = read(d.path(), "convergence.csv");
    assert_eq!(
        header,
        ["outer_iter", "l2_error_u", "v_norm_r", "uzawa_energy"]
    );
    assert_eq!(rows.len(), 25);
    assert!(num(&rows[24][1]) <= 0.05);
    let (header, rows) = read(d.path(), "trace_energy.csv");
    assert_eq!(header, ["outer_iter", "phase", "inner_iter", "energy"]);
    assert_eq!(rows.len(), 25 * 2 * 21);
    let (header, rows) = read(d.path(), "snapshots.csv");
    assert_eq!(header, ["outer_iter", "x", "r_value", "u_value"]);
    assert_eq!(rows.len(), 25 * 1001);
}

#[test]
fn zero_source_gives_zero_columns() {
    let d = TempDir::new().unwrap();
    assert_eq!(
        run(
            d.path(),
            &with_out(d.path(), "command = solve\nsource_values = 0\n")
        ),
        0
    );
    for (name, cols) in [
        ("convergence.csv", &[1, 2, 3][..]),
        ("trace_energy.csv", &[3][..]),
        ("snapshots.csv", &[2, 3][..]),
    ] {
        let (_, rows) = read(d.path(), name);
        for row in rows {
            for &c in cols {
                assert_eq!(num(&row[c]), 0.0, "{name}: {row:?}");
            }
        }
    }
}

#[test]
fn reruns_are_bit_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let body = "command = solve\ninit_scheme = random-uniform\nseed = 9\nouter_iters = 5\n";
    assert_eq!(run(a.path(), &with_out(a.path(), body)), 0);
    assert_eq!(run(b.path(), &with_out(b.path(), body)), 0);
    for name in ["convergence.csv", "trace_energy.csv", "snapshots.csv"] {
        let x = std::fs::read(out_dir(a.path()).join(name)).unwrap();
        let y = std::fs::read(out_dir(b.path()).join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(
        &cfg,
        with_out(
            d.path(),
            "command = solve\ninit_scheme = random-uniform\nouter_iters = 2\n",
        ),
    )
    .unwrap();
    let go = |seed: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_uzawa-ritz"))
            .arg(&cfg)
            .env("UZAWA_RITZ_SEED", seed)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out_dir(d.path()).join("convergence.csv")).unwrap()
    };
    let (a, b, c) = (go("1"), go("2"), go("1"));
    assert_eq!(a, c);
    assert_ne!(a, b);
}

#[test]
fn default_sweep() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), &with_out(d.path(), "command = sweep\n")), 0);
    let (header, rows) = read(d.path(), "sweep.csv");
    assert_eq!(header, ["tau", "outer_iter", "l2_error_u", "uzawa_energy"]);
    assert_eq!(rows.len(), 8 * 25);
    let final_at = |tau: f64| {
        let row = rows.iter().rfind(|r| num(&r[0]) == tau).unwrap();
        assert_eq!(row[1], "25");
        num(&row[2])
    };
    assert!(final_at(2.0) > final_at(0.5));
}

#[test]
fn single_step_sweep_matches_solve() {
    let s = TempDir::new().unwrap();
    let w = TempDir::new().unwrap();
    assert_eq!(
        run(
            s.path(),
            &with_out(s.path(), "command = solve\ntau = 0.8\n")
        ),
        0
    );
    assert_eq!(
        run(
            w.path(),
            &with_out(w.path(), "command = sweep\nsweep_taus = 0.8\ntau = 0.8\n")
        ),
        0
    );
    let (_, solve) = read(s.path(), "convergence.csv");
    let (_, sweep) = read(w.path(), "sweep.csv");
    assert_eq!(solve.len(), sweep.len());
    for (a, b) in solve.iter().zip(&sweep) {
        assert_eq!((&a[0], &a[1], &a[3]), (&b[1], &b[2], &b[3]));
    }
}

#[test]
fn verify_defaults_pass() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), &with_out(d.path(), "command = verify\n")), 0);
    let (header, rows) = read(d.path(), "verify_report.csv");
    assert_eq!(
        header,
        [
            "theorem",
            "seed",
            "dims",
            "tau",
            "delta",
            "epsilon",
            "alpha",
            "omega",
            "observed_rate",
            "predicted_rate",
            "pass"
        ]
    );
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r[10] == "true"), "{rows:?}");
}

#[test]
fn over_budget_rows_are_excluded() {
    let d = TempDir::new().unwrap();
    assert_eq!(
        run(
            d.path(),
            &with_out(d.path(), "command = verify\nverify_delta = 0.9\n")
        ),
        0
    );
    let (_, rows) = read(d.path(), "verify_report.csv");
    for r in rows.iter().filter(|r| r[0] == "inexact_uzawa") {
        assert_eq!(r[10], "excluded");
    }
}

#[test]
fn oversized_step_doubles_the_error() {
    let d = TempDir::new().unwrap();
    let body =
        "command = verify\nverify_problem = isotropic\nverify_tau = 3\nverify_seeds = 1, 2\n";
    assert_eq!(run(d.path(), &with_out(d.path(), body)), 0);
    let (_, rows) = read(d.path(), "verify_report.csv");
    let exact: Vec<_> = rows.iter().filter(|r| r[0] == "exact_uzawa").collect();
    assert_eq!(exact.len(), 2);
    for r in exact {
        assert!((num(&r[8]) - 2.0).abs() < 1e-12, "{r:?}");
        assert_eq!(r[10], "excluded");
    }
}

#[test]
fn default_spectrum() {
    let d = TempDir::new().unwrap();
    assert_eq!(
        run(d.path(), &with_out(d.path(), "command = spectrum\n")),
        0
    );
    let (header, rows) = read(d.path(), "spectrum.csv");
    assert_eq!(header.len(), 10);
    assert_eq!(rows.len(), 9 * 9 * 9 * 10);
    for r in &rows {
        assert!(num(&r[8]) < 1.0 && r[9] == "true", "{r:?}");
        let product =
            Complex64::new(num(&r[4]), num(&r[5])) * Complex64::new(num(&r[6]), num(&r[7]));
        assert!((product - Complex64::new(1.0 - num(&r[0]), 0.0)).norm() < 1e-12);
    }
}

#[test]
fn stagnation_row() {
    let d = TempDir::new().unwrap();
    let body = "command = spectrum\nspectrum_alphas = 0\nspectrum_omegas = 0.5\nspectrum_taus = 1\nspectrum_mus = 1\n";
    assert_eq!(run(d.path(), &with_out(d.path(), body)), 0);
    let (_, rows) = read(d.path(), "spectrum.csv");
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0][8]) - 1.0).abs() < 1e-15);
    assert_eq!(rows[0][9], "false");
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    // configuration and I/O problems
    let missing = Command::new(env!("CARGO_BIN_EXE_uzawa-ritz"))
        .arg(d.path().join("nope.cfg"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(run(d.path(), "command = solve\ntau = abc\n"), 1);
    assert_eq!(run(d.path(), "tau = 0.3\n"), 1);
    std::fs::write(d.path().join("blocker"), "").unwrap();
    let blocked = format!(
        "command = spectrum\noutput_dir = {}\n",
        d.path().join("blocker").display()
    );
    assert_eq!(run(d.path(), &blocked), 1);
    // numerical abort
    assert_eq!(
        run(
            d.path(),
            &with_out(d.path(), "command = solve\ntau = 1e300\n")
        ),
        2
    );
    // failed check: slow modes the fitting window cannot resolve
    let body = "command = verify\nverify_alpha = 0.1\nverify_omega = 0.1\nverify_tau = 0.1\n";
    assert_eq!(run(d.path(), &with_out(d.path(), body)), 3);
    let (_, rows) = read(d.path(), "verify_report.csv");
    assert!(rows.iter().any(|r| r[10] == "false"));
}
