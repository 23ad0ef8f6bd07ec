//! The 1D transport problem `u′ = f`, `u(0) = 0`, solved by alternating
//! Ritz minimizations over a test network (residual) and a trial network
//! (solution) inside an outer Uzawa loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nets::{
    grad_r, grad_u, ritz_energy_r, ritz_energy_u, solve_outer_c, solve_outer_d, ShallowTestNet,
    ShallowTrialNet, DEFAULT_RIDGE,
};
use crate::piecewise::{
    integrate_cl, l2_distance_cl, Breakpoints, PiecewiseConstant, PiecewiseLinear,
};
use crate::saddle::MatrixSaddleProblem;

/// Number of uniform sample points in each snapshot.
pub const SNAPSHOT_POINTS: usize = 1001;

/// Consecutive clamps after which an inner parameter is frozen for the
/// rest of its inner loop.
pub const FREEZE_AFTER_CLAMPS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    pub f: PiecewiseConstant,
}

impl TransportProblem {
    pub fn new(f: PiecewiseConstant) -> Self {
        TransportProblem { f }
    }

    /// `f ≡ 1`, with exact solution `u(x) = x`.
    pub fn unit_source() -> Self {
        TransportProblem {
            f: PiecewiseConstant::constant(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// `bᵢ = i/(n+1)`, `βᵢ = (i−1)/m`, zero outer weights.
    EquispacedZero,
    /// Breakpoints uniform in `(0, 1)`, weights uniform in `(−0.1, 0.1)`.
    RandomUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub tau: f64,
    /// Inner step size for the test-network breakpoints.
    pub alpha: f64,
    /// Inner step size for the trial-network jump points.
    pub omega: f64,
    pub n_r_inner: usize,
    pub n_u_inner: usize,
    pub outer_iters: usize,
    pub n_neurons_r: usize,
    pub n_neurons_u: usize,
    pub ridge: f64,
    pub seed: u64,
    pub init_scheme: InitScheme,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: 0.5,
            alpha: 0.04,
            omega: 0.01,
            n_r_inner: 20,
            n_u_inner: 20,
            outer_iters: 25,
            n_neurons_r: 20,
            n_neurons_u: 20,
            ridge: DEFAULT_RIDGE,
            seed: 42,
            init_scheme: InitScheme::EquispacedZero,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be positive"));
        }
        if !(self.alpha > 0.0) || !(self.omega > 0.0) {
            return Err(Error::InvalidParameter("inner step sizes must be positive"));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidParameter("ridge must be non-negative"));
        }
        if self.n_r_inner == 0 || self.n_u_inner == 0 || self.outer_iters == 0 {
            return Err(Error::InvalidParameter(
                "iteration counts must be at least 1",
            ));
        }
        if self.n_neurons_r == 0 || self.n_neurons_u == 0 {
            return Err(Error::InvalidParameter("neuron counts must be at least 1"));
        }
        Ok(())
    }
}

/// `u(x) = ∫₀ˣ f`.
pub fn exact_solution(f: &PiecewiseConstant) -> PiecewiseLinear {
    f.antiderivative()
}

/// Initial `(trial, test)` networks. The random scheme draws the test
/// network first.
pub fn init_networks<R: Rng>(
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(ShallowTrialNet, ShallowTestNet)> {
    let (n, m) = (cfg.n_neurons_r, cfg.n_neurons_u);
    match cfg.init_scheme {
        InitScheme::EquispacedZero => {
            let b = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
            let beta = (0..m).map(|i| i as f64 / m as f64).collect();
            Ok((
                ShallowTrialNet::new(vec![0.0; m], beta)?,
                ShallowTestNet::new(vec![0.0; n], b)?,
            ))
        }
        InitScheme::RandomUniform => {
            let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
            let beta: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let d: Vec<f64> = (0..m).map(|_| rng.random_range(-0.1..0.1)).collect();
            Ok((ShallowTrialNet::new(d, beta)?, ShallowTestNet::new(c, b)?))
        }
    }
}

/// Energies of one inner loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InnerTrace {
    /// Energy of the incoming network.
    pub initial: f64,
    /// Energy after each outer-weight solve.
    pub after_solve: Vec<f64>,
    /// Energy after each full inner iteration.
    pub energies: Vec<f64>,
    /// Whether the gradient step of each iteration hit the box.
    pub clamped: Vec<bool>,
    pub clamp_events: usize,
    pub frozen: usize,
}

impl InnerTrace {
    pub fn final_energy(&self) -> f64 {
        self.energies.last().copied().unwrap_or(self.initial)
    }

    /// Every solve lowers the energy, and every unclamped iteration ends no
    /// higher than the previous one.
    pub fn is_descending(&self, slack: f64) -> bool {
        let mut prev = self.initial;
        for i in 0..self.energies.len() {
            if self.after_solve[i] > prev + slack {
                return false;
            }
            if !self.clamped[i] && self.energies[i] > prev + slack {
                return false;
            }
            prev = self.energies[i];
        }
        true
    }
}

/// Projected gradient step on inner parameters with clamp bookkeeping.
struct ClampTracker {
    run: Vec<usize>,
    frozen: Vec<bool>,
    events: usize,
}

impl ClampTracker {
    fn new(n: usize) -> Self {
        ClampTracker {
            run: vec![0; n],
            frozen: vec![false; n],
            events: 0,
        }
    }

    fn step(&mut self, params: &[f64], grad: &[f64], rate: f64) -> (Vec<f64>, bool) {
        let mut clamped = false;
        let next = params
            .iter()
            .zip(grad)
            .enumerate()
            .map(|(i, (&p, &g))| {
                if self.frozen[i] {
                    return p;
                }
                let cand = p - rate * g;
                if (0.0..=1.0).contains(&cand) {
                    self.run[i] = 0;
                    cand
                } else {
                    clamped = true;
                    self.events += 1;
                    self.run[i] += 1;
                    if self.run[i] > FREEZE_AFTER_CLAMPS {
                        self.frozen[i] = true;
                    }
                    cand.clamp(0.0, 1.0)
                }
            })
            .collect();
        (next, clamped)
    }

    fn frozen_count(&self) -> usize {
        self.frozen.iter().filter(|&&f| f).count()
    }
}

fn finite(e: f64, what: &'static str) -> Result<f64> {
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Residual network update: `n_r_inner` rounds of an exact solve in `c`
/// followed by a projected gradient step in `b` with rate `alpha`.
pub fn deep_ritz_r(
    u_k: &PiecewiseConstant,
    mut net: ShallowTestNet,
    f: &PiecewiseConstant,
    cfg: &TrainConfig,
) -> Result<(ShallowTestNet, InnerTrace)> {
    let mut trace = InnerTrace {
        initial: finite(ritz_energy_r(&net, u_k, f), "residual energy")?,
        ..InnerTrace::default()
    };
    let mut tracker = ClampTracker::new(net.len());
    for _ in 0..cfg.n_r_inner {
        net.set_outer(solve_outer_c(net.inner(), u_k, f, cfg.ridge)?)?;
        trace
            .after_solve
            .push(finite(ritz_energy_r(&net, u_k, f), "residual energy")?);
        let g = grad_r(&net, u_k, f);
        let (b, clamped) = tracker.step(net.inner(), &g.wrt_inner, cfg.alpha);
        net.set_inner(&b)?;
        trace
            .energies
            .push(finite(ritz_energy_r(&net, u_k, f), "residual energy")?);
        trace.clamped.push(clamped);
    }
    trace.clamp_events = tracker.events;
    trace.frozen = tracker.frozen_count();
    Ok((net, trace))
}

/// Solution network update: `n_u_inner` rounds of an exact solve in `d`
/// followed by a projected gradient step in `β` with rate `omega`.
pub fn deep_ritz_u(
    r_k_prime: &PiecewiseConstant,
    u_k: &PiecewiseConstant,
    mut net: ShallowTrialNet,
    cfg: &TrainConfig,
) -> Result<(ShallowTrialNet, InnerTrace)> {
    let tau = cfg.tau;
    let mut trace = InnerTrace {
        initial: finite(ritz_energy_u(&net, r_k_prime, u_k, tau), "solution energy")?,
        ..InnerTrace::default()
    };
    let mut tracker = ClampTracker::new(net.len());
    for _ in 0..cfg.n_u_inner {
        net.set_outer(solve_outer_d(net.inner(), r_k_prime, u_k, tau, cfg.ridge)?)?;
        trace.after_solve.push(finite(
            ritz_energy_u(&net, r_k_prime, u_k, tau),
            "solution energy",
        )?);
        let g = grad_u(&net, r_k_prime, u_k, tau);
        let (beta, clamped) = tracker.step(net.inner(), &g.wrt_inner, cfg.omega);
        net.set_inner(&beta)?;
        trace.energies.push(finite(
            ritz_energy_u(&net, r_k_prime, u_k, tau),
            "solution energy",
        )?);
        trace.clamped.push(clamped);
    }
    trace.clamp_events = tracker.events;
    trace.frozen = tracker.frozen_count();
    Ok((net, trace))
}

/// `‖u_θ − u_exact‖_{L²(0,1)}`, computed exactly.
pub fn l2_error(u_net: &ShallowTrialNet, u_exact: &PiecewiseLinear) -> f64 {
    l2_distance_cl(&u_net.as_piecewise(), u_exact)
}

/// `‖r‖_V = (Σ cⱼcₖ min(bⱼ, bₖ))^{1/2}`.
pub fn v_norm_r(net: &ShallowTestNet) -> f64 {
    libm::sqrt(net.v_norm_sq().max(0.0))
}

/// Both networks sampled on [`SNAPSHOT_POINTS`] uniform points.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

impl Snapshot {
    pub fn sample(r: &ShallowTestNet, u: &ShallowTrialNet) -> Self {
        let last = (SNAPSHOT_POINTS - 1) as f64;
        let x: Vec<f64> = (0..SNAPSHOT_POINTS).map(|i| i as f64 / last).collect();
        Snapshot {
            r: x.iter().map(|&x| r.eval(x)).collect(),
            u: x.iter().map(|&x| u.eval(x)).collect(),
            x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub r_trace: InnerTrace,
    pub u_trace: InnerTrace,
    pub v_norm_r: f64,
    pub l2_error_u: f64,
    /// Solution energy at the end of the trial-network loop.
    pub uzawa_energy: f64,
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub outer: Vec<OuterRecord>,
    pub final_test: ShallowTestNet,
    pub final_trial: ShallowTrialNet,
}

impl RunTrace {
    pub fn final_l2_error(&self) -> f64 {
        self.outer.last().map_or(f64::NAN, |o| o.l2_error_u)
    }

    pub fn l2_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.outer.iter().map(|o| o.l2_error_u)
    }

    pub fn v_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.outer.iter().map(|o| o.v_norm_r)
    }
}

/// Runs `cfg.outer_iters` outer iterations. Both networks warm-start from
/// their previous values; the solution passed forward is the exact
/// piecewise-constant function realized by the trial network.
pub fn run_uddr(problem: &TransportProblem, cfg: &TrainConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let f = &problem.f;
    let u_exact = exact_solution(f);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut u_net, mut r_net) = init_networks(cfg, &mut rng)?;
    let mut outer = Vec::with_capacity(cfg.outer_iters);
    for k in 1..=cfg.outer_iters {
        let u_k = u_net.as_piecewise();
        let (r_next, r_trace) = deep_ritz_r(&u_k, r_net, f, cfg).map_err(|e| abort(e, k))?;
        let r_prime = r_next.derivative();
        let (u_next, u_trace) = deep_ritz_u(&r_prime, &u_k, u_net, cfg).map_err(|e| abort(e, k))?;
        outer.push(OuterRecord {
            v_norm_r: v_norm_r(&r_next),
            l2_error_u: l2_error(&u_next, &u_exact),
            uzawa_energy: u_trace.final_energy(),
            snapshot: Snapshot::sample(&r_next, &u_next),
            r_trace,
            u_trace,
        });
        r_net = r_next;
        u_net = u_next;
    }
    Ok(RunTrace {
        outer,
        final_test: r_net,
        final_trial: u_net,
    })
}

fn abort(e: Error, step: usize) -> Error {
    match e {
        Error::NonFinite(what) => Error::Diverged { step, what },
        other => other,
    }
}

/// Lowest-order mixed discretization of the transport problem on `cells`
/// uniform cells: piecewise constants for `U` (`R_U = hI`) and continuous
/// piecewise linears vanishing at `1` for `V` (stiffness matrix `R_V`).
/// For this pair `sup_v b(u, v)/‖v‖_V = ‖u‖_U` exactly, so `m = M = 1`.
pub fn transport_surrogate(f: &PiecewiseConstant, cells: usize) -> Result<MatrixSaddleProblem> {
    if cells == 0 {
        return Err(Error::InvalidParameter("need at least one cell"));
    }
    let n = cells;
    let h = 1.0 / n as f64;
    let grid = Breakpoints::new((0..=n).map(|i| i as f64 * h))?;
    // Hat ψⱼ at node j·h, j = 0..n−1; cell k is [k·h, (k+1)·h].
    let mut b = Matrix::zeros(n, n);
    let mut r_v = Matrix::zeros(n, n);
    for j in 0..n {
        b[(j, j)] = 1.0;
        r_v[(j, j)] = if j == 0 { 1.0 / h } else { 2.0 / h };
        if j > 0 {
            b[(j, j - 1)] = -1.0;
            r_v[(j, j - 1)] = -1.0 / h;
            r_v[(j - 1, j)] = -1.0 / h;
        }
    }
    let mut r_u = Matrix::identity(n);
    for i in 0..n {
        r_u[(i, i)] = h;
    }
    let l = (0..n)
        .map(|j| {
            let mut nodes = vec![0.0; n + 1];
            nodes[j] = 1.0;
            let hat = PiecewiseLinear::new(grid.clone(), nodes)?;
            Ok(integrate_cl(f, &hat))
        })
        .collect::<Result<Vec<f64>>>()?;
    MatrixSaddleProblem::new(b, r_u, r_v, l)
}
