//! Gauss–Legendre rules on `[0, X]`.

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 100;

/// An immutable quadrature rule on `[0, X]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    domain_length: f64,
}

impl QuadratureRule {
    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of nodes `m`; the rule is exact through degree `2m − 1`.
    #[inline]
    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// `Σ wᵢ g(xᵢ)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Legendre `P_m(t)` and `P_m'(t)` on `[-1, 1]`.
fn legendre_with_deriv(m: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 1..m {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let prev = if m == 0 { 0.0 } else { p0 };
    let d = m as f64 * (t * p - prev) / (t * t - 1.0);
    (p, d)
}

/// The `m`-point Gauss–Legendre rule mapped to `[0, X]`.
///
/// Roots are located by Newton iteration started from Chebyshev-type guesses
/// and mirrored about the midpoint, so the rule is exactly symmetric.
pub fn gauss_legendre_rule(m: usize, domain_length: f64) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::Domain("quadrature degree must be at least 1".into()));
    }
    if !(domain_length.is_finite() && domain_length > 0.0) {
        return Err(Error::Domain(format!("domain length must be positive, got {domain_length}")));
    }
    let mf = m as f64;
    let mut t_nodes = vec![0.0; m];
    let mut t_weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // root i counted from the right end
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut converged = false;
        let mut deriv = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_with_deriv(m, t);
            let step = p / d;
            t -= step;
            deriv = d;
            if step.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "Newton iteration for Gauss-Legendre root {i} of degree {m} did not converge"
            )));
        }
        let (_, d) = legendre_with_deriv(m, t);
        deriv = if d.is_finite() { d } else { deriv };
        let w = 2.0 / ((1.0 - t * t) * deriv * deriv);
        let (lo, hi) = (i, m - 1 - i);
        if lo == hi {
            t_nodes[lo] = 0.0;
        } else {
            t_nodes[lo] = -t;
            t_nodes[hi] = t;
        }
        t_weights[lo] = w;
        t_weights[hi] = w;
    }
    let half = 0.5 * domain_length;
    let nodes = t_nodes.iter().map(|&t| half * (t + 1.0)).collect();
    let weights = t_weights.iter().map(|&w| half * w).collect();
    Ok(QuadratureRule { nodes, weights, domain_length })
}

/// A tensor-product rule on `[0, T] × [0, X]`, time index outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRule {
    pub time: QuadratureRule,
    pub space: QuadratureRule,
}

impl TensorRule {
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, g: F) -> f64 {
        let mut total = 0.0;
        for (&t, &wt) in self.time.nodes().iter().zip(self.time.weights()) {
            for (&x, &wx) in self.space.nodes().iter().zip(self.space.weights()) {
                total += wt * wx * g(t, x);
            }
        }
        total
    }
}
