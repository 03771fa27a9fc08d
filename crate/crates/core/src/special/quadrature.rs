use nalgebra::{DMatrix, SymmetricEigen};

use super::gamma::ln_gamma_unchecked;
use crate::error::{parameter, Error, Result};

/// Gauss–Jacobi rule on (−1, 1) for the weight (1 − u)^alpha (1 + u)^beta.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The symmetric exponent, when alpha == beta.
    pub fn exponent(&self) -> Option<f64> {
        (self.alpha == self.beta).then_some(self.alpha)
    }

    /// Σ w_i g(u_i).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&u, &w)| w * g(u)).sum()
    }

    /// Total mass ∫ (1 − u)^alpha (1 + u)^beta du.
    pub fn weight_mass(&self) -> f64 {
        jacobi_mass(self.alpha, self.beta)
    }
}

pub(crate) fn jacobi_mass(alpha: f64, beta: f64) -> f64 {
    ((alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma_unchecked(alpha + 1.0) + ln_gamma_unchecked(beta + 1.0)
        - ln_gamma_unchecked(alpha + beta + 2.0))
    .exp()
}

/// n-point rule for (1 − u²)^exponent.
pub fn gauss_jacobi(n: usize, exponent: f64) -> Result<QuadratureRule> {
    let mut rule = gauss_jacobi_general(n, exponent, exponent)?;
    // Symmetrise to remove the last-bit asymmetry of the eigen-solver.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let u = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        let w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -u;
        rule.nodes[j] = u;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.0;
    }
    Ok(rule)
}

pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    gauss_jacobi(n, 0.0)
}

/// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
/// three-term recurrence for the Jacobi polynomials P_n^{(alpha, beta)}.
pub fn gauss_jacobi_general(n: usize, alpha: f64, beta: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(parameter("quadrature rule needs at least one node"));
    }
    if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(parameter(format!(
            "Jacobi exponents must exceed -1 (alpha={alpha}, beta={beta})"
        )));
    }
    let s = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let num = beta * beta - alpha * alpha;
        jm[(k, k)] = if num == 0.0 {
            0.0
        } else {
            num / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
        };
    }
    for k in 1..n {
        let kf = k as f64;
        let two = 2.0 * kf + s;
        let head = 4.0 * kf * (kf + alpha) * (kf + beta) / (two * two * (two + 1.0));
        // (k + s)/(2k + s − 1) is 0/0 at k = 1 when s = −1; its limit is 1.
        let tail = if (two - 1.0).abs() < 1e-14 {
            1.0
        } else {
            (kf + s) / (two - 1.0)
        };
        let b = (head * tail).sqrt();
        jm[(k, k - 1)] = b;
        jm[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::try_new(jm, 1e-15, 10_000).ok_or(Error::EigenSolve(n))?;
    let mass = jacobi_mass(alpha, beta);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.iter().any(|(u, w)| !u.is_finite() || !w.is_finite()) {
        return Err(Error::EigenSolve(n));
    }
    Ok(QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        alpha,
        beta,
    })
}
