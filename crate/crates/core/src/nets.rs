//! One-hidden-layer networks on `[0, 1]` with closed-form Ritz energies.
//!
//! The test network `r(x) = Σ cᵢ ReLU(bᵢ − x)` lives in the test space
//! `V = {v ∈ H¹ : v(1) = 0}` with `(r, v)_V = ∫ r′v′`; the trial network
//! `u(x) = Σ dᵢ H(x − βᵢ)` lives in `U = L²`. For the transport operator
//! `b(u, v) = −∫ u v′` every energy term reduces to sums over neuron pairs and
//! running integrals of the data, so energies and gradients are exact.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::piecewise::{Breakpoints, PiecewiseConstant, PiecewiseLinear};

/// Breakpoints closer than this make the energy non-differentiable.
pub const DEGENERATE_GAP: f64 = 1e-12;

/// Default ridge added to the outer Gram matrices.
pub const DEFAULT_RIDGE: f64 = 1e-10;

fn validate_pair(outer: &[f64], inner: &[f64], what: &'static str) -> Result<()> {
    if outer.is_empty() {
        return Err(Error::InvalidParameter(
            "a network needs at least one neuron",
        ));
    }
    if outer.len() != inner.len() {
        return Err(Error::LengthMismatch {
            what,
            expected: outer.len(),
            got: inner.len(),
        });
    }
    if outer.iter().chain(inner).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    if let Some(&x) = inner.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::OutsideDomain(x));
    }
    Ok(())
}

/// Heaviside step with the midpoint value at the jump.
fn step_half(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// `r(x) = Σ cᵢ max(bᵢ − x, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowTestNet {
    c: Vec<f64>,
    b: Vec<f64>,
}

impl ShallowTestNet {
    pub fn new(c: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        validate_pair(&c, &b, "test network parameters")?;
        Ok(ShallowTestNet { c, b })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn outer(&self) -> &[f64] {
        &self.c
    }

    pub fn inner(&self) -> &[f64] {
        &self.b
    }

    pub fn set_outer(&mut self, c: Vec<f64>) -> Result<()> {
        validate_pair(&c, &self.b, "test network parameters")?;
        self.c = c;
        Ok(())
    }

    /// Replaces the breakpoints, clamping them into `[0, 1]`.
    pub fn set_inner(&mut self, b: &[f64]) -> Result<()> {
        let b = project_inner(b);
        validate_pair(&self.c, &b, "test network parameters")?;
        self.b = b;
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c
            .iter()
            .zip(&self.b)
            .map(|(c, b)| c * (b - x).max(0.0))
            .sum()
    }

    /// `‖r‖²_V = Σⱼₖ cⱼcₖ min(bⱼ, bₖ)`.
    pub fn v_norm_sq(&self) -> f64 {
        let g = test_gram(&self.b);
        quad_form(&g, &self.c)
    }

    /// Exact piecewise-linear representation on `{0, bᵢ, 1}`.
    pub fn as_piecewise(&self) -> PiecewiseLinear {
        let breaks = Breakpoints::new(self.b.iter().copied()).expect("validated breakpoints");
        let nodes = breaks.as_slice().iter().map(|&x| self.eval(x)).collect();
        PiecewiseLinear::new(breaks, nodes).expect("finite node values")
    }

    /// `r′(x) = −Σ cᵢ 𝟙[x < bᵢ]` as a piecewise constant.
    pub fn derivative(&self) -> PiecewiseConstant {
        let breaks = Breakpoints::new(self.b.iter().copied()).expect("validated breakpoints");
        let values = breaks
            .intervals()
            .map(|(lo, hi)| {
                let m = 0.5 * (lo + hi);
                -self
                    .c
                    .iter()
                    .zip(&self.b)
                    .filter(|(_, &b)| m < b)
                    .map(|(c, _)| c)
                    .sum::<f64>()
            })
            .collect();
        PiecewiseConstant::new(breaks, values).expect("finite derivative")
    }
}

/// `u(x) = Σ dᵢ H(x − βᵢ)` with `H(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowTrialNet {
    d: Vec<f64>,
    beta: Vec<f64>,
}

impl ShallowTrialNet {
    pub fn new(d: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        validate_pair(&d, &beta, "trial network parameters")?;
        Ok(ShallowTrialNet { d, beta })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn outer(&self) -> &[f64] {
        &self.d
    }

    pub fn inner(&self) -> &[f64] {
        &self.beta
    }

    pub fn set_outer(&mut self, d: Vec<f64>) -> Result<()> {
        validate_pair(&d, &self.beta, "trial network parameters")?;
        self.d = d;
        Ok(())
    }

    /// Replaces the jump points, clamping them into `[0, 1]`.
    pub fn set_inner(&mut self, beta: &[f64]) -> Result<()> {
        let beta = project_inner(beta);
        validate_pair(&self.d, &beta, "trial network parameters")?;
        self.beta = beta;
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.d
            .iter()
            .zip(&self.beta)
            .filter(|(_, &beta)| x >= beta)
            .map(|(d, _)| d)
            .sum()
    }

    /// `‖u‖²_{L²} = Σᵢⱼ dᵢdⱼ (1 − max(βᵢ, βⱼ))`.
    pub fn l2_norm_sq(&self) -> f64 {
        quad_form(&trial_gram(&self.beta), &self.d)
    }

    /// Exact piecewise-constant representation on `{0, βᵢ, 1}`.
    pub fn as_piecewise(&self) -> PiecewiseConstant {
        let breaks = Breakpoints::new(self.beta.iter().copied()).expect("validated jump points");
        let values = breaks
            .intervals()
            .map(|(lo, hi)| self.eval(0.5 * (lo + hi)))
            .collect();
        PiecewiseConstant::new(breaks, values).expect("finite values")
    }
}

/// Gradient of a Ritz energy with respect to outer and inner parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient {
    pub wrt_outer: Vec<f64>,
    pub wrt_inner: Vec<f64>,
    /// Set when two relevant breakpoints are within [`DEGENERATE_GAP`]; the
    /// gradient then uses midpoint one-sided values.
    pub degenerate: bool,
}

/// `G_{jk} = min(bⱼ, bₖ)`.
pub fn test_gram(b: &[f64]) -> Matrix {
    Matrix::from_fn(b.len(), b.len(), |j, k| b[j].min(b[k]))
}

/// `M_{ij} = 1 − max(βᵢ, βⱼ)`.
pub fn trial_gram(beta: &[f64]) -> Matrix {
    Matrix::from_fn(beta.len(), beta.len(), |i, j| 1.0 - beta[i].max(beta[j]))
}

fn quad_form(g: &Matrix, x: &[f64]) -> f64 {
    crate::linalg::dot(x, &g.mul_vec(x))
}

fn solve_ridge(mut gram: Matrix, ridge: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    if !(ridge >= 0.0) {
        return Err(Error::InvalidParameter("ridge must be non-negative"));
    }
    gram.add_scaled_identity(ridge);
    Ok(Cholesky::factor(&gram)?.solve(rhs))
}

/// Right-hand side of the test-network normal equations:
/// `∂𝒥/∂c = (G c) − rhs`, with `rhsⱼ = ∫₀^{bⱼ} f(x)(bⱼ − x) dx − ∫₀^{bⱼ} u_k`.
fn test_rhs(b: &[f64], u_k: &PiecewiseConstant, f: &PiecewiseConstant) -> Vec<f64> {
    b.iter()
        .map(|&bj| f.second_integral_to(bj) - u_k.integral_to(bj))
        .collect()
}

/// Right-hand side of the trial-network normal equations:
/// `∂𝒥/∂d = (M d) − rhs`, with
/// `rhsᵢ = ∫_{βᵢ}^1 u_k − τ ∫_{βᵢ}^1 r′`.
fn trial_rhs(
    beta: &[f64],
    r_prime: &PiecewiseConstant,
    u_k: &PiecewiseConstant,
    tau: f64,
) -> Vec<f64> {
    let (uk_total, rp_total) = (u_k.integral_to(1.0), r_prime.integral_to(1.0));
    beta.iter()
        .map(|&bi| (uk_total - u_k.integral_to(bi)) - tau * (rp_total - r_prime.integral_to(bi)))
        .collect()
}

/// `𝒥_r = ½‖r‖²_V − ℓ(r) + b(u_k, r)` with `ℓ(r) = ∫ f r` and
/// `b(u, r) = −∫ u r′`.
pub fn ritz_energy_r(net: &ShallowTestNet, u_k: &PiecewiseConstant, f: &PiecewiseConstant) -> f64 {
    let rhs = test_rhs(&net.b, u_k, f);
    0.5 * net.v_norm_sq() - crate::linalg::dot(&net.c, &rhs)
}

/// `𝒥_u = ½‖u‖²_U − τ b(u, r_k) − (u_k, u)_U`.
pub fn ritz_energy_u(
    net: &ShallowTrialNet,
    r_k_prime: &PiecewiseConstant,
    u_k: &PiecewiseConstant,
    tau: f64,
) -> f64 {
    let rhs = trial_rhs(&net.beta, r_k_prime, u_k, tau);
    0.5 * net.l2_norm_sq() - crate::linalg::dot(&net.d, &rhs)
}

fn near_any(x: f64, points: &[f64]) -> bool {
    points.iter().any(|p| (p - x).abs() <= DEGENERATE_GAP)
}

fn has_close_pair(xs: &[f64]) -> bool {
    xs.iter()
        .enumerate()
        .any(|(i, a)| xs[i + 1..].iter().any(|b| (a - b).abs() <= DEGENERATE_GAP))
}

/// Analytic gradient of [`ritz_energy_r`].
///
/// `∂𝒥/∂bᵢ = cᵢ (Σ_{k≠i} cₖ H(bₖ − bᵢ) + ½cᵢ − ∫₀^{bᵢ} f + u_k(bᵢ))`, where the
/// first two terms are `−r′(bᵢ)` at the jump midpoint.
pub fn grad_r(
    net: &ShallowTestNet,
    u_k: &PiecewiseConstant,
    f: &PiecewiseConstant,
) -> EnergyGradient {
    let (c, b) = (&net.c, &net.b);
    let g = test_gram(b);
    let gc = g.mul_vec(c);
    let rhs = test_rhs(b, u_k, f);
    let wrt_outer = gc.iter().zip(&rhs).map(|(a, r)| a - r).collect();
    let wrt_inner = (0..c.len())
        .map(|i| {
            let coupling: f64 = (0..c.len())
                .filter(|&k| k != i)
                .map(|k| c[k] * step_half(b[k] - b[i]))
                .sum();
            c[i] * (coupling + 0.5 * c[i] - f.integral_to(b[i]) + u_k.average_at(b[i]))
        })
        .collect();
    let degenerate = has_close_pair(b)
        || b.iter()
            .any(|&x| near_any(x, u_k.breaks().interior()) || near_any(x, f.breaks().interior()));
    EnergyGradient {
        wrt_outer,
        wrt_inner,
        degenerate,
    }
}

/// Analytic gradient of [`ritz_energy_u`].
///
/// `∂𝒥/∂βᵢ = −dᵢ (Σ_{j≠i} dⱼ H(βᵢ − βⱼ) + ½dᵢ) − τ dᵢ r′_k(βᵢ) + dᵢ u_k(βᵢ)`.
pub fn grad_u(
    net: &ShallowTrialNet,
    r_k_prime: &PiecewiseConstant,
    u_k: &PiecewiseConstant,
    tau: f64,
) -> EnergyGradient {
    let (d, beta) = (&net.d, &net.beta);
    let md = trial_gram(beta).mul_vec(d);
    let rhs = trial_rhs(beta, r_k_prime, u_k, tau);
    let wrt_outer = md.iter().zip(&rhs).map(|(a, r)| a - r).collect();
    let wrt_inner = (0..d.len())
        .map(|i| {
            let coupling: f64 = (0..d.len())
                .filter(|&j| j != i)
                .map(|j| d[j] * step_half(beta[i] - beta[j]))
                .sum();
            -d[i] * (coupling + 0.5 * d[i]) - tau * d[i] * r_k_prime.average_at(beta[i])
                + d[i] * u_k.average_at(beta[i])
        })
        .collect();
    let degenerate = has_close_pair(beta)
        || beta.iter().any(|&x| {
            near_any(x, r_k_prime.breaks().interior()) || near_any(x, u_k.breaks().interior())
        });
    EnergyGradient {
        wrt_outer,
        wrt_inner,
        degenerate,
    }
}

/// Exact minimizer in `c` of the ridge-augmented test energy for fixed `b`.
pub fn solve_outer_c(
    b: &[f64],
    u_k: &PiecewiseConstant,
    f: &PiecewiseConstant,
    ridge: f64,
) -> Result<Vec<f64>> {
    solve_ridge(test_gram(b), ridge, &test_rhs(b, u_k, f))
}

/// Exact minimizer in `d` of the ridge-augmented trial energy for fixed `β`.
pub fn solve_outer_d(
    beta: &[f64],
    r_k_prime: &PiecewiseConstant,
    u_k: &PiecewiseConstant,
    tau: f64,
    ridge: f64,
) -> Result<Vec<f64>> {
    solve_ridge(
        trial_gram(beta),
        ridge,
        &trial_rhs(beta, r_k_prime, u_k, tau),
    )
}

/// Componentwise clamp to `[0, 1]`.
pub fn project_inner(params: &[f64]) -> Vec<f64> {
    params.iter().map(|p| p.clamp(0.0, 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn test_net(c: &[f64], b: &[f64]) -> ShallowTestNet {
        ShallowTestNet::new(c.to_vec(), b.to_vec()).unwrap()
    }

    fn trial_net(d: &[f64], beta: &[f64]) -> ShallowTrialNet {
        ShallowTrialNet::new(d.to_vec(), beta.to_vec()).unwrap()
    }

    #[test]
    fn single_relu_is_one_minus_x() {
        let r = test_net(&[1.0], &[1.0]).as_piecewise();
        assert_eq!(r.breaks().as_slice(), &[0.0, 1.0]);
        assert_eq!(r.node_values(), &[1.0, 0.0]);
    }

    #[test]
    fn zero_weights_give_zero_function() {
        let net = test_net(&[0.0, 0.0], &[0.3, 0.8]);
        assert!(net.as_piecewise().node_values().iter().all(|&v| v == 0.0));
        assert!(net.derivative().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_relus_nodes() {
        let r = test_net(&[1.0, 1.0], &[0.5, 1.0]).as_piecewise();
        assert_eq!(r.breaks().as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(r.node_values(), &[1.5, 0.5, 0.0]);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(test_net(&[1.0], &[1.0]).derivative().values(), &[-1.0]);
        let d = test_net(&[2.0, -1.0], &[0.3, 0.7]).derivative();
        assert_eq!(d.breaks().as_slice(), &[0.0, 0.3, 0.7, 1.0]);
        assert_eq!(d.values(), &[-1.0, 1.0, 0.0]);
    }

    #[test]
    fn heaviside_examples() {
        assert_eq!(trial_net(&[1.0], &[0.0]).as_piecewise().values(), &[1.0]);
        let step = trial_net(&[1.0], &[0.5]);
        assert_eq!(step.as_piecewise().values(), &[0.0, 1.0]);
        assert_eq!(step.eval(0.5), 1.0);
        let u = trial_net(&[1.0, -2.0], &[0.25, 0.75]).as_piecewise();
        assert_eq!(u.values(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn energy_r_examples() {
        let one = PiecewiseConstant::constant(1.0);
        let zero = PiecewiseConstant::zero();
        assert_eq!(ritz_energy_r(&test_net(&[1.0], &[1.0]), &zero, &one), 0.0);
        assert_eq!(
            ritz_energy_r(&test_net(&[0.0, 0.0], &[0.2, 0.6]), &one, &one),
            0.0
        );
    }

    #[test]
    fn energy_u_examples() {
        let zero = PiecewiseConstant::zero();
        let e = ritz_energy_u(&trial_net(&[1.0], &[0.0]), &zero, &zero, 0.5);
        assert_eq!(e, 0.5);
        let one = PiecewiseConstant::constant(1.0);
        assert_eq!(
            ritz_energy_u(&trial_net(&[0.0], &[0.4]), &one, &one, 0.5),
            0.0
        );
    }

    #[test]
    fn grad_r_examples() {
        let one = PiecewiseConstant::constant(1.0);
        let zero = PiecewiseConstant::zero();
        let g = grad_r(&test_net(&[0.0, 0.0], &[0.2, 0.6]), &one, &one);
        assert!(g.wrt_inner.iter().all(|&v| v == 0.0));
        let g = grad_r(&test_net(&[1.0], &[0.5]), &zero, &one);
        assert!(g.wrt_inner[0].abs() < 1e-15);
        assert!(!g.degenerate);
    }

    #[test]
    fn grad_u_examples() {
        let zero = PiecewiseConstant::zero();
        let g = grad_u(&trial_net(&[0.0, 0.0], &[0.1, 0.9]), &zero, &zero, 0.5);
        assert!(g.wrt_inner.iter().all(|&v| v == 0.0));
        let g = grad_u(&trial_net(&[1.0], &[0.5]), &zero, &zero, 0.7);
        assert_eq!(g.wrt_inner, vec![-0.5]);
    }

    #[test]
    fn degenerate_configuration_is_flagged() {
        let zero = PiecewiseConstant::zero();
        let g = grad_r(&test_net(&[1.0, 1.0], &[0.4, 0.4]), &zero, &zero);
        assert!(g.degenerate);
        let u_k = trial_net(&[1.0], &[0.3]).as_piecewise();
        let g = grad_u(&trial_net(&[1.0], &[0.3]), &zero, &u_k, 0.5);
        assert!(g.degenerate);
    }

    #[test]
    fn outer_c_single_neuron() {
        let one = PiecewiseConstant::constant(1.0);
        let zero = PiecewiseConstant::zero();
        assert_eq!(solve_outer_c(&[1.0], &zero, &one, 0.0).unwrap(), vec![0.5]);
        assert_eq!(
            solve_outer_c(&[0.3, 0.8], &zero, &zero, 0.0).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn outer_d_single_neuron() {
        let one = PiecewiseConstant::constant(1.0);
        let zero = PiecewiseConstant::zero();
        assert_eq!(
            solve_outer_d(&[0.0], &zero, &one, 0.5, 0.0).unwrap(),
            vec![1.0]
        );
        assert_eq!(
            solve_outer_d(&[0.0, 0.5], &zero, &zero, 0.5, 0.0).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn singular_gram_without_ridge_fails() {
        let zero = PiecewiseConstant::zero();
        assert!(matches!(
            solve_outer_c(&[0.0], &zero, &zero, 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(solve_outer_c(&[0.0], &zero, &zero, DEFAULT_RIDGE).is_ok());
        assert!(solve_outer_c(&[0.5], &zero, &zero, -1.0).is_err());
    }

    #[test]
    fn projection_clamps() {
        assert_eq!(project_inner(&[0.5, -0.2, 1.3]), vec![0.5, 0.0, 1.0]);
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(ShallowTestNet::new(vec![], vec![]).is_err());
        assert!(ShallowTestNet::new(vec![1.0], vec![0.5, 0.6]).is_err());
        assert!(ShallowTrialNet::new(vec![1.0], vec![1.5]).is_err());
    }

    #[test]
    fn set_inner_projects() {
        let mut net = test_net(&[1.0, 1.0], &[0.5, 0.5]);
        net.set_inner(&[-0.1, 1.2]).unwrap();
        assert_eq!(net.inner(), &[0.0, 1.0]);
    }
}
