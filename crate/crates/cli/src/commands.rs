//! The `solve`, `sweep` and `spectrum` workflows.

use std::thread;

use uzawa_ritz_core::stability::{char_poly_coefficients, char_poly_roots, schur_cohn_quadratic};
use uzawa_ritz_core::transport::{run_uddr, RunTrace, TrainConfig, TransportProblem};

use crate::output::{fmt_f64, Table};
use crate::{CliConfig, CliError};

pub const TRACE_ENERGY_HEADER: [&str; 4] = ["outer_iter", "phase", "inner_iter", "energy"];
pub const SNAPSHOTS_HEADER: [&str; 4] = ["outer_iter", "x", "r_value", "u_value"];
pub const CONVERGENCE_HEADER: [&str; 4] = ["outer_iter", "l2_error_u", "v_norm_r", "uzawa_energy"];
pub const SWEEP_HEADER: [&str; 4] = ["tau", "outer_iter", "l2_error_u", "uzawa_energy"];
pub const SPECTRUM_HEADER: [&str; 10] = [
    "alpha",
    "omega",
    "tau",
    "mu",
    "root1_re",
    "root1_im",
    "root2_re",
    "root2_im",
    "max_modulus",
    "schur_cohn_pass",
];

/// Inner iteration 0 is the energy of the incoming network.
pub fn trace_energy_table(run: &RunTrace) -> Table {
    let mut t = Table::new(&TRACE_ENERGY_HEADER);
    for (k, o) in run.outer.iter().enumerate() {
        for (phase, trace) in [("r", &o.r_trace), ("u", &o.u_trace)] {
            let energies = std::iter::once(trace.initial).chain(trace.energies.iter().copied());
            for (i, e) in energies.enumerate() {
                t.push(vec![
                    (k + 1).to_string(),
                    phase.into(),
                    i.to_string(),
                    fmt_f64(e),
                ]);
            }
        }
    }
    t
}

pub fn snapshots_table(run: &RunTrace) -> Table {
    let mut t = Table::new(&SNAPSHOTS_HEADER);
    for (k, o) in run.outer.iter().enumerate() {
        let s = &o.snapshot;
        for i in 0..s.x.len() {
            t.push(vec![
                (k + 1).to_string(),
                fmt_f64(s.x[i]),
                fmt_f64(s.r[i]),
                fmt_f64(s.u[i]),
            ]);
        }
    }
    t
}

pub fn convergence_table(run: &RunTrace) -> Table {
    let mut t = Table::new(&CONVERGENCE_HEADER);
    for (k, o) in run.outer.iter().enumerate() {
        t.push(vec![
            (k + 1).to_string(),
            fmt_f64(o.l2_error_u),
            fmt_f64(o.v_norm_r),
            fmt_f64(o.uzawa_energy),
        ]);
    }
    t
}

pub fn solve(cfg: &CliConfig) -> Result<(), CliError> {
    let problem = TransportProblem::new(cfg.source()?);
    let run = run_uddr(&problem, &cfg.train)?;
    trace_energy_table(&run).write(&cfg.output_dir, "trace_energy.csv")?;
    snapshots_table(&run).write(&cfg.output_dir, "snapshots.csv")?;
    convergence_table(&run).write(&cfg.output_dir, "convergence.csv")?;
    Ok(())
}

/// One run per step size, concurrently, in the order of `taus`.
pub fn sweep_runs(
    problem: &TransportProblem,
    base: &TrainConfig,
    taus: &[f64],
) -> Vec<Result<RunTrace, CliError>> {
    thread::scope(|scope| {
        let handles: Vec<_> = taus
            .iter()
            .map(|&tau| {
                let cfg = TrainConfig {
                    tau,
                    ..base.clone()
                };
                scope.spawn(move || run_uddr(problem, &cfg).map_err(CliError::from))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

pub fn sweep(cfg: &CliConfig) -> Result<(), CliError> {
    let problem = TransportProblem::new(cfg.source()?);
    let runs = sweep_runs(&problem, &cfg.train, &cfg.sweep_taus);
    let mut t = Table::new(&SWEEP_HEADER);
    for (&tau, run) in cfg.sweep_taus.iter().zip(runs) {
        for (k, o) in run?.outer.iter().enumerate() {
            t.push(vec![
                fmt_f64(tau),
                (k + 1).to_string(),
                fmt_f64(o.l2_error_u),
                fmt_f64(o.uzawa_energy),
            ]);
        }
    }
    t.write(&cfg.output_dir, "sweep.csv")?;
    Ok(())
}

pub fn spectrum_table(cfg: &CliConfig) -> Table {
    let s = &cfg.spectrum;
    let mut t = Table::new(&SPECTRUM_HEADER);
    for &alpha in &s.alphas {
        for &omega in &s.omegas {
            for &tau in &s.taus {
                for &mu in &s.mus {
                    let (a2, a1, a0) = char_poly_coefficients(alpha, omega, tau, mu);
                    let r = char_poly_roots(alpha, omega, tau, mu);
                    t.push(vec![
                        fmt_f64(alpha),
                        fmt_f64(omega),
                        fmt_f64(tau),
                        fmt_f64(mu),
                        fmt_f64(r.first.re),
                        fmt_f64(r.first.im),
                        fmt_f64(r.second.re),
                        fmt_f64(r.second.im),
                        fmt_f64(r.max_modulus()),
                        schur_cohn_quadratic(a2, a1, a0).to_string(),
                    ]);
                }
            }
        }
    }
    t
}

pub fn spectrum(cfg: &CliConfig) -> Result<(), CliError> {
    spectrum_table(cfg).write(&cfg.output_dir, "spectrum.csv")?;
    Ok(())
}
