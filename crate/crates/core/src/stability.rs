//! Closed-form stability predicates for the Uzawa family.

use num_complex::Complex64;

use crate::saddle::effective_tau;

/// Contraction factor of the exact iteration, `max(|1 − τm²|, |1 − τM²|)`.
pub fn gamma(tau: f64, m: f64, big_m: f64) -> f64 {
    let a = libm::fabs(1.0 - tau * m * m);
    let b = libm::fabs(1.0 - tau * big_m * big_m);
    a.max(b)
}

/// Inexactness budget of the perturbed iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub gamma: f64,
    /// `(1 − γ)/(τM²)`
    pub budget_rhs: f64,
    /// `δ + ε(1 + δ)`
    pub budget_lhs: f64,
    pub admissible: bool,
    /// `γ + τM²(δ + ε(1 + δ))`
    pub predicted_rate: f64,
}

pub fn inexact_budget(delta: f64, epsilon: f64, tau: f64, m: f64, big_m: f64) -> StabilityReport {
    let g = gamma(tau, m, big_m);
    let tm2 = tau * big_m * big_m;
    let budget_lhs = delta + epsilon * (1.0 + delta);
    let budget_rhs = (1.0 - g) / tm2;
    StabilityReport {
        gamma: g,
        budget_rhs,
        budget_lhs,
        admissible: g < 1.0 && budget_lhs < budget_rhs,
        predicted_rate: g + tm2 * budget_lhs,
    }
}

/// Roots of a real quadratic, possibly a complex-conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticRoots {
    pub first: Complex64,
    pub second: Complex64,
}

impl QuadraticRoots {
    pub fn max_modulus(&self) -> f64 {
        self.first.norm().max(self.second.norm())
    }

    pub fn product(&self) -> Complex64 {
        self.first * self.second
    }

    pub fn sum(&self) -> Complex64 {
        self.first + self.second
    }
}

/// Coefficients `(a2, a1, a0)` of `p(λ) = λ² − (2 − α − τ̃αμ)λ + (1 − α)`.
pub fn char_poly_coefficients(alpha: f64, omega: f64, tau: f64, mu: f64) -> (f64, f64, f64) {
    let tt = effective_tau(tau, omega);
    (1.0, -(2.0 - alpha - tt * alpha * mu), 1.0 - alpha)
}

/// Roots of the monic quadratic `λ² + a1 λ + a0`.
///
/// Real roots use the cancellation-free form: the larger-magnitude root
/// first, the other from the product `a0`.
pub fn monic_quadratic_roots(a1: f64, a0: f64) -> QuadraticRoots {
    let half = -0.5 * a1;
    let disc = half * half - a0;
    if disc < 0.0 {
        let im = libm::sqrt(-disc);
        return QuadraticRoots {
            first: Complex64::new(half, im),
            second: Complex64::new(half, -im),
        };
    }
    let big = half + libm::copysign(libm::sqrt(disc), half);
    let small = if big != 0.0 { a0 / big } else { 0.0 };
    QuadraticRoots {
        first: Complex64::new(big, 0.0),
        second: Complex64::new(small, 0.0),
    }
}

pub fn char_poly_roots(alpha: f64, omega: f64, tau: f64, mu: f64) -> QuadraticRoots {
    let (_, a1, a0) = char_poly_coefficients(alpha, omega, tau, mu);
    monic_quadratic_roots(a1, a0)
}

/// Schur–Cohn test for `a2 λ² + a1 λ + a0`: both roots strictly inside the
/// unit disk. Boundary cases return false.
pub fn schur_cohn_quadratic(a2: f64, a1: f64, a0: f64) -> bool {
    // Normalize so a2 > 0; the test is stated for a positive leading term.
    let (a2, a1, a0) = if a2 < 0.0 {
        (-a2, -a1, -a0)
    } else {
        (a2, a1, a0)
    };
    a2 + a1 + a0 > 0.0 && a2 - a1 + a0 > 0.0 && libm::fabs(a0) < libm::fabs(a2)
}

/// Spectral radius of the one-step-gradient propagator predicted from
/// `spec(G)` and the dimension of `ker Bᵀ`.
pub fn predicted_spectral_radius(
    alpha: f64,
    omega: f64,
    tau: f64,
    spectrum_g: &[f64],
    kernel_dim: usize,
) -> f64 {
    let mut rho = spectrum_g
        .iter()
        .map(|&mu| char_poly_roots(alpha, omega, tau, mu).max_modulus())
        .fold(0.0, f64::max);
    if kernel_dim > 0 {
        rho = rho.max(libm::fabs(1.0 - alpha));
    }
    rho
}
