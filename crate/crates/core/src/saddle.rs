//! Finite-dimensional saddle-point problems and the Uzawa family of
//! iterations on them.
//!
//! A problem is `(B, R_U, R_V, l)` with `B: ℝ^{m_U} → ℝ^{n_V}` and SPD Riesz
//! matrices. Its mixed form is
//!
//! ```text
//! R_V r + B u = l
//! Bᵀ r        = 0
//! ```
//!
//! Norms are the Riesz energy norms `‖u‖_U² = uᵀR_U u`, `‖r‖_V² = rᵀR_V r`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, Cholesky, Matrix};

/// Symmetry tolerance for Riesz matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense instance `(B, R_U, R_V, l)` with cached Cholesky factors.
#[derive(Debug, Clone)]
pub struct MatrixSaddleProblem {
    b: Matrix,
    r_u: Matrix,
    r_v: Matrix,
    l: Vec<f64>,
    chol_u: Cholesky,
    chol_v: Cholesky,
}

impl MatrixSaddleProblem {
    pub fn new(b: Matrix, r_u: Matrix, r_v: Matrix, l: Vec<f64>) -> Result<Self> {
        let (n_v, m_u) = (b.rows(), b.cols());
        if m_u == 0 || n_v < m_u {
            return Err(Error::InvalidParameter("need n_V >= m_U >= 1"));
        }
        if r_u.rows() != m_u || !r_u.is_square() {
            return Err(Error::LengthMismatch {
                what: "R_U dimension",
                expected: m_u,
                got: r_u.rows(),
            });
        }
        if r_v.rows() != n_v || !r_v.is_square() {
            return Err(Error::LengthMismatch {
                what: "R_V dimension",
                expected: n_v,
                got: r_v.rows(),
            });
        }
        if l.len() != n_v {
            return Err(Error::LengthMismatch {
                what: "load vector",
                expected: n_v,
                got: l.len(),
            });
        }
        if !r_u.is_symmetric(SYMMETRY_TOL) || !r_v.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::InvalidParameter("Riesz matrices must be symmetric"));
        }
        let chol_u = Cholesky::factor(&r_u)?;
        let chol_v = Cholesky::factor(&r_v)?;
        Ok(MatrixSaddleProblem {
            b,
            r_u,
            r_v,
            l,
            chol_u,
            chol_v,
        })
    }

    pub fn n_v(&self) -> usize {
        self.b.rows()
    }

    pub fn m_u(&self) -> usize {
        self.b.cols()
    }

    pub fn operator(&self) -> &Matrix {
        &self.b
    }

    pub fn riesz_u(&self) -> &Matrix {
        &self.r_u
    }

    pub fn riesz_v(&self) -> &Matrix {
        &self.r_v
    }

    pub fn load(&self) -> &[f64] {
        &self.l
    }

    /// Same operators with a different load vector.
    pub fn with_load(&self, l: Vec<f64>) -> Result<Self> {
        if l.len() != self.n_v() {
            return Err(Error::LengthMismatch {
                what: "load vector",
                expected: self.n_v(),
                got: l.len(),
            });
        }
        Ok(MatrixSaddleProblem { l, ..self.clone() })
    }

    /// The problem with `l = 0`, whose iterates are exactly the error
    /// sequence of any affine stepper.
    pub fn homogeneous(&self) -> Self {
        MatrixSaddleProblem {
            l: vec![0.0; self.n_v()],
            ..self.clone()
        }
    }

    pub fn u_norm(&self, u: &[f64]) -> f64 {
        libm::sqrt(dot(u, &self.r_u.mul_vec(u)).max(0.0))
    }

    pub fn v_norm(&self, r: &[f64]) -> f64 {
        libm::sqrt(dot(r, &self.r_v.mul_vec(r)).max(0.0))
    }

    pub fn u_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.r_u.mul_vec(b))
    }

    /// `R_U⁻¹ g`.
    pub fn riesz_u_inv(&self, g: &[f64]) -> Vec<f64> {
        self.chol_u.solve(g)
    }

    /// `R_V⁻¹ g`.
    pub fn riesz_v_inv(&self, g: &[f64]) -> Vec<f64> {
        self.chol_v.solve(g)
    }

    /// Exact residual representative `R_V⁻¹(l − B u)`.
    pub fn residual_representative(&self, u: &[f64]) -> Vec<f64> {
        let bu = self.b.mul_vec(u);
        self.riesz_v_inv(&linalg::sub(&self.l, &bu))
    }

    /// `R_U⁻¹ Bᵀ r`.
    pub fn dual_gradient(&self, r: &[f64]) -> Vec<f64> {
        self.riesz_u_inv(&self.b.tr_mul_vec(r))
    }

    /// `G = R_U⁻¹ Bᵀ R_V⁻¹ B` applied to `u`.
    pub fn apply_g(&self, u: &[f64]) -> Vec<f64> {
        self.dual_gradient(&self.riesz_v_inv(&self.b.mul_vec(u)))
    }
}

/// Iterates `(u^k, r^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UzawaState {
    pub u: Vec<f64>,
    pub r: Vec<f64>,
}

impl UzawaState {
    pub fn zeros(p: &MatrixSaddleProblem) -> Self {
        UzawaState {
            u: vec![0.0; p.m_u()],
            r: vec![0.0; p.n_v()],
        }
    }

    fn check(&self, p: &MatrixSaddleProblem) -> Result<()> {
        if self.u.len() != p.m_u() {
            return Err(Error::LengthMismatch {
                what: "state u",
                expected: p.m_u(),
                got: self.u.len(),
            });
        }
        if self.r.len() != p.n_v() {
            return Err(Error::LengthMismatch {
                what: "state r",
                expected: p.n_v(),
                got: self.r.len(),
            });
        }
        Ok(())
    }
}

/// Solves the coupled mixed system directly.
pub fn reference_solution(p: &MatrixSaddleProblem) -> Result<UzawaState> {
    let (n, m) = (p.n_v(), p.m_u());
    let mut kkt = Matrix::zeros(n + m, n + m);
    kkt.set_block(0, 0, &p.r_v);
    kkt.set_block(0, n, &p.b);
    kkt.set_block(n, 0, &p.b.transpose());
    let mut rhs = p.l.clone();
    rhs.resize(n + m, 0.0);
    let x = linalg::solve_lu(&kkt, &rhs)?;
    Ok(UzawaState {
        r: x[..n].to_vec(),
        u: x[n..].to_vec(),
    })
}

/// One exact Uzawa step: `r ← R_V⁻¹(l − Bu)`, `u ← u + τ R_U⁻¹Bᵀr`.
pub fn exact_uzawa_step(p: &MatrixSaddleProblem, s: &UzawaState, tau: f64) -> UzawaState {
    let r = p.residual_representative(&s.u);
    let mut u = s.u.clone();
    linalg::axpy(tau, &p.dual_gradient(&r), &mut u);
    UzawaState { u, r }
}

/// How perturbation directions are chosen in [`inexact_uzawa_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Uniformly random unit direction.
    RandomDirection,
    /// Along the current error, pushing the iterate away from the solution.
    ErrorAligned,
}

/// Relative inexactness of the two Uzawa substeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub delta: f64,
    pub epsilon: f64,
    pub mode: PerturbationMode,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(delta: f64, epsilon: f64, mode: PerturbationMode, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) || !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(
                "delta and epsilon must be non-negative",
            ));
        }
        Ok(PerturbationSpec {
            delta,
            epsilon,
            mode,
            seed,
        })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Unit vector in the given norm; falls back to a random draw for zero input.
fn unit_direction<R: Rng, N: Fn(&[f64]) -> f64>(mut v: Vec<f64>, norm: N, rng: &mut R) -> Vec<f64> {
    let mut n = norm(&v);
    while !(n > 0.0) {
        v = gaussian_vector(rng, v.len());
        n = norm(&v);
    }
    linalg::scale(1.0 / n, &v)
}

/// One inexact Uzawa step with perturbations sized exactly at the relative
/// bounds `‖r_δ − r‖_V = δ‖r‖_V` and `‖u_{δ,ε} − u_δ‖_U = ε‖u − u_δ‖_U`.
///
/// `target` is the saddle point; it is only consulted in
/// [`PerturbationMode::ErrorAligned`].
pub fn inexact_uzawa_step<R: Rng>(
    p: &MatrixSaddleProblem,
    s: &UzawaState,
    tau: f64,
    spec: &PerturbationSpec,
    target: &UzawaState,
    rng: &mut R,
) -> UzawaState {
    let r_exact = p.residual_representative(&s.u);
    let r_dir = match spec.mode {
        PerturbationMode::RandomDirection => gaussian_vector(rng, p.n_v()),
        PerturbationMode::ErrorAligned => linalg::sub(&r_exact, &target.r),
    };
    let mut r = r_exact.clone();
    if spec.delta > 0.0 {
        let w = unit_direction(r_dir, |v| p.v_norm(v), rng);
        linalg::axpy(spec.delta * p.v_norm(&r_exact), &w, &mut r);
    }

    let mut u_delta = s.u.clone();
    linalg::axpy(tau, &p.dual_gradient(&r), &mut u_delta);
    let mut u = u_delta.clone();
    if spec.epsilon > 0.0 {
        let u_dir = match spec.mode {
            PerturbationMode::RandomDirection => gaussian_vector(rng, p.m_u()),
            PerturbationMode::ErrorAligned => linalg::sub(&u_delta, &target.u),
        };
        let z = unit_direction(u_dir, |v| p.u_norm(v), rng);
        let step = p.u_norm(&linalg::sub(&s.u, &u_delta));
        linalg::axpy(spec.epsilon * step, &z, &mut u);
    }
    UzawaState { u, r }
}

/// One step of the single-gradient-step scheme. `s.r` holds `r^{k−1}`:
///
/// ```text
/// r^k     = (1 − α) r^{k−1} + α R_V⁻¹(l − B u^k)
/// u^{k+1} = u^k + τ̃ R_U⁻¹ Bᵀ r^k,   τ̃ = τω/(1 + ω)
/// ```
pub fn one_step_gradient_step(
    p: &MatrixSaddleProblem,
    s: &UzawaState,
    alpha: f64,
    omega: f64,
    tau: f64,
) -> UzawaState {
    let exact = p.residual_representative(&s.u);
    let r: Vec<f64> =
        s.r.iter()
            .zip(&exact)
            .map(|(prev, ex)| (1.0 - alpha) * prev + alpha * ex)
            .collect();
    let mut u = s.u.clone();
    linalg::axpy(effective_tau(tau, omega), &p.dual_gradient(&r), &mut u);
    UzawaState { u, r }
}

/// `τ̃ = τω/(1 + ω)`.
pub fn effective_tau(tau: f64, omega: f64) -> f64 {
    tau * omega / (1.0 + omega)
}

/// The error propagator of [`one_step_gradient_step`] acting on stacked
/// `(e_r, e_u)` coordinates:
///
/// ```text
/// [ (1−α) I_V          −α R_V⁻¹B              ]
/// [ τ̃(1−α) R_U⁻¹Bᵀ     I_U − τ̃α R_U⁻¹BᵀR_V⁻¹B ]
/// ```
pub fn build_iteration_matrix(p: &MatrixSaddleProblem, alpha: f64, omega: f64, tau: f64) -> Matrix {
    let (n, m) = (p.n_v(), p.m_u());
    let tt = effective_tau(tau, omega);
    let mut a = Matrix::zeros(n + m, n + m);
    for i in 0..n {
        a[(i, i)] = 1.0 - alpha;
    }
    for j in 0..m {
        let rv_inv_b = p.riesz_v_inv(&p.b.column(j));
        for i in 0..n {
            a[(i, n + j)] = -alpha * rv_inv_b[i];
        }
        let g_col = p.dual_gradient(&rv_inv_b);
        for i in 0..m {
            let id = if i == j { 1.0 } else { 0.0 };
            a[(n + i, n + j)] = id - tt * alpha * g_col[i];
        }
    }
    for j in 0..n {
        let mut unit = vec![0.0; n];
        unit[j] = 1.0;
        let col = p.dual_gradient(&unit);
        for i in 0..m {
            a[(n + i, j)] = tt * (1.0 - alpha) * col[i];
        }
    }
    a
}

/// Inf-sup and continuity constants of `B` in the Riesz norms.
#[derive(Debug, Clone, PartialEq)]
pub struct InfSupBounds {
    pub m: f64,
    pub big_m: f64,
    /// Ascending spectrum of `G = R_U⁻¹BᵀR_V⁻¹B`.
    pub spectrum: Vec<f64>,
    /// `B` is rank deficient; `m` is reported as `0`.
    pub rank_deficient: bool,
}

/// Extreme eigenvalues of `G` via the symmetric similarity
/// `L_U⁻¹ (BᵀR_V⁻¹B) L_U⁻ᵀ` with `R_U = L_U L_Uᵀ`.
pub fn estimate_bounds(p: &MatrixSaddleProblem) -> Result<InfSupBounds> {
    let m = p.m_u();
    // S = Bᵀ R_V⁻¹ B
    let rv_inv_b: Vec<Vec<f64>> = (0..m).map(|j| p.riesz_v_inv(&p.b.column(j))).collect();
    let s = Matrix::from_fn(m, m, |i, j| dot(&p.b.column(i), &rv_inv_b[j]));
    // L⁻¹ S L⁻ᵀ, built column by column then symmetrized against rounding
    let mut tmp = Matrix::zeros(m, m);
    for j in 0..m {
        let mut col = s.column(j);
        p.chol_u.forward_in_place(&mut col);
        for i in 0..m {
            tmp[(i, j)] = col[i];
        }
    }
    let mut sym = Matrix::zeros(m, m);
    for i in 0..m {
        let mut row = tmp.row(i).to_vec();
        p.chol_u.forward_in_place(&mut row);
        for j in 0..m {
            sym[(i, j)] = row[j];
        }
    }
    let sym = Matrix::from_fn(m, m, |i, j| 0.5 * (sym[(i, j)] + sym[(j, i)]));
    let eig = linalg::symmetric_eigen(&sym)?;
    let lmax = eig.values[m - 1].max(0.0);
    let lmin = eig.values[0];
    let rank_deficient = !(lmin > 1e-12 * lmax);
    Ok(InfSupBounds {
        m: if rank_deficient {
            0.0
        } else {
            libm::sqrt(lmin)
        },
        big_m: libm::sqrt(lmax),
        spectrum: eig.values,
        rank_deficient,
    })
}

/// A stateful iteration rule on a fixed problem.
pub trait Stepper {
    fn step(&mut self, p: &MatrixSaddleProblem, s: &UzawaState) -> UzawaState;
}

#[derive(Debug, Clone, Copy)]
pub struct ExactUzawa {
    pub tau: f64,
}

impl Stepper for ExactUzawa {
    fn step(&mut self, p: &MatrixSaddleProblem, s: &UzawaState) -> UzawaState {
        exact_uzawa_step(p, s, self.tau)
    }
}

#[derive(Debug, Clone)]
pub struct InexactUzawa {
    pub tau: f64,
    pub spec: PerturbationSpec,
    target: UzawaState,
    rng: ChaCha8Rng,
}

impl InexactUzawa {
    pub fn new(tau: f64, spec: PerturbationSpec, target: UzawaState) -> Self {
        InexactUzawa {
            tau,
            rng: spec.rng(),
            spec,
            target,
        }
    }
}

impl Stepper for InexactUzawa {
    fn step(&mut self, p: &MatrixSaddleProblem, s: &UzawaState) -> UzawaState {
        inexact_uzawa_step(p, s, self.tau, &self.spec, &self.target, &mut self.rng)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OneStepGradient {
    pub alpha: f64,
    pub omega: f64,
    pub tau: f64,
}

impl Stepper for OneStepGradient {
    fn step(&mut self, p: &MatrixSaddleProblem, s: &UzawaState) -> UzawaState {
        one_step_gradient_step(p, s, self.alpha, self.omega, self.tau)
    }
}

/// Errors after one step. Record 0 describes the starting state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub u_error: f64,
    pub r_error: f64,
    /// `‖e_u^{k+1}‖ / ‖e_u^k‖`; absent for the starting record or when the
    /// previous error was exactly zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<StepRecord>,
    pub converged: bool,
    pub final_state: UzawaState,
}

impl IterationTrace {
    pub fn u_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.u_error)
    }
}

/// Runs `stepper` until `‖u − u*‖_U ≤ tol` or `max_steps` steps.
pub fn run_iteration<S: Stepper>(
    p: &MatrixSaddleProblem,
    stepper: &mut S,
    s0: UzawaState,
    reference: &UzawaState,
    max_steps: usize,
    tol: f64,
) -> Result<IterationTrace> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive"));
    }
    s0.check(p)?;
    let err = |s: &UzawaState| {
        (
            p.u_norm(&linalg::sub(&s.u, &reference.u)),
            p.v_norm(&linalg::sub(&s.r, &reference.r)),
        )
    };
    let (u0, r0) = err(&s0);
    let mut records = vec![StepRecord {
        u_error: u0,
        r_error: r0,
        ratio: None,
    }];
    let mut state = s0;
    let mut converged = u0 <= tol;
    let mut step = 0;
    while !converged && step < max_steps {
        step += 1;
        let next = stepper.step(p, &state);
        if next.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step, what: "u" });
        }
        if next.r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step, what: "r" });
        }
        let prev = records[records.len() - 1].u_error;
        let (ue, re) = err(&next);
        records.push(StepRecord {
            u_error: ue,
            r_error: re,
            ratio: (prev > 0.0).then(|| ue / prev),
        });
        converged = ue <= tol;
        state = next;
    }
    Ok(IterationTrace {
        records,
        converged,
        final_state: state,
    })
}

/// Least-squares slope of `log ‖E^k‖` over `window`, returned as a rate.
///
/// Runs the one-step-gradient scheme on the homogeneous problem (so iterates
/// are errors) from a seeded random start, renormalizing every step so the
/// fit is unaffected by underflow.
pub fn empirical_decay_rate(
    p: &MatrixSaddleProblem,
    alpha: f64,
    omega: f64,
    tau: f64,
    window: (usize, usize),
    seed: u64,
) -> f64 {
    let (start, end) = window;
    let hom = p.homogeneous();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = UzawaState {
        u: gaussian_vector(&mut rng, p.m_u()),
        r: gaussian_vector(&mut rng, p.n_v()),
    };
    let stacked_norm =
        |s: &UzawaState| libm::sqrt(hom.u_norm(&s.u).powi(2) + hom.v_norm(&s.r).powi(2));
    let mut log_norm = libm::log(stacked_norm(&s));
    let (mut sx, mut sy, mut sxx, mut sxy, mut count) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 1..=end {
        s = one_step_gradient_step(&hom, &s, alpha, omega, tau);
        let n = stacked_norm(&s);
        if !(n > 0.0) || !n.is_finite() {
            break;
        }
        log_norm += libm::log(n);
        s.u.iter_mut().chain(s.r.iter_mut()).for_each(|v| *v /= n);
        if k >= start {
            let x = k as f64;
            sx += x;
            sy += log_norm;
            sxx += x * x;
            sxy += x * log_norm;
            count += 1.0;
        }
    }
    let slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    libm::exp(slope)
}

/// Seeded random instance: `B` with standard normal entries and
/// `R = L Lᵀ + I` with `L` entries drawn from `N(0, 1/n)`.
///
/// With `consistent` the load is `l = B u_true`, so the saddle point has
/// `r* = 0`; otherwise `l` is standard normal.
pub fn random_problem(
    n_v: usize,
    m_u: usize,
    seed: u64,
    consistent: bool,
) -> Result<MatrixSaddleProblem> {
    if m_u == 0 || n_v < m_u {
        return Err(Error::InvalidParameter("need n_V >= m_U >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = Matrix::from_fn(n_v, m_u, |_, _| rng.sample(StandardNormal));
    let r_u = random_spd(&mut rng, m_u);
    let r_v = random_spd(&mut rng, n_v);
    let l = if consistent {
        let u_true = gaussian_vector(&mut rng, m_u);
        b.mul_vec(&u_true)
    } else {
        gaussian_vector(&mut rng, n_v)
    };
    MatrixSaddleProblem::new(b, r_u, r_v, l)
}

fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let s = 1.0 / libm::sqrt(n as f64);
    let l = Matrix::from_fn(n, n, |_, _| s * rng.sample::<f64, _>(StandardNormal));
    let mut a = l.matmul(&l.transpose());
    a.add_scaled_identity(1.0);
    Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Instance with `m = M = scale`: identity Riesz maps and `B = scale·Q` for
/// `Q` with orthonormal columns (Gram–Schmidt on a Gaussian draw).
pub fn isotropic_problem(
    n_v: usize,
    m_u: usize,
    scale: f64,
    seed: u64,
) -> Result<MatrixSaddleProblem> {
    if m_u == 0 || n_v < m_u {
        return Err(Error::InvalidParameter("need n_V >= m_U >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m_u);
    while cols.len() < m_u {
        let mut v = gaussian_vector(&mut rng, n_v);
        for q in &cols {
            let proj = dot(q, &v);
            linalg::axpy(-proj, q, &mut v);
        }
        let n = linalg::norm(&v);
        if n > 1e-8 {
            cols.push(linalg::scale(1.0 / n, &v));
        }
    }
    let b = Matrix::from_fn(n_v, m_u, |i, j| scale * cols[j][i]);
    let l = gaussian_vector(&mut rng, n_v);
    MatrixSaddleProblem::new(b, Matrix::identity(m_u), Matrix::identity(n_v), l)
}
