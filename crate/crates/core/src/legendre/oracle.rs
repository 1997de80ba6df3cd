//! Reference Caputo derivative by direct quadrature of the defining integral.
//!
//! Used to cross-check the series path and the manufactured forcings. The
//! solver never calls into this module.
//!
//! With `α = κ − ζ` the substitution `s = x(1 − u^{1/α})` removes the kernel
//! singularity:
//!
//! ```text
//! (1/Γ(α)) ∫₀ˣ (x−s)^{α−1} g⁽ᵏ⁾(s) ds = x^α / Γ(α+1) ∫₀¹ g⁽ᵏ⁾(x(1 − u^{1/α})) du
//! ```
//!
//! The remaining integral is smooth for smooth `g` and is taken with a
//! 200-point Gauss–Legendre rule; relative accuracy is better than 1e-6.

use std::sync::OnceLock;

use statrs::function::gamma::gamma;

use super::FractionalOrder;
use crate::quadrature::{gauss_legendre_rule, QuadratureRule};

const ORACLE_POINTS: usize = 200;

fn unit_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(ORACLE_POINTS, 1.0).expect("200-point rule"))
}

/// Caputo derivative of order `zeta` at `x` given the `κ`-th derivative of `g`.
///
/// For integer `ζ` this is just `g⁽ᵏ⁾(x)`.
pub fn caputo_oracle<F>(kth_derivative: F, x: f64, zeta: FractionalOrder) -> f64
where
    F: Fn(f64) -> f64,
{
    if zeta.is_integer() {
        return kth_derivative(x);
    }
    if x == 0.0 {
        return 0.0;
    }
    let alpha = zeta.kappa() as f64 - zeta.zeta();
    let inv = 1.0 / alpha;
    let rule = unit_rule();
    let integral: f64 = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&u, &w)| w * kth_derivative(x * (1.0 - u.powf(inv))))
        .sum();
    x.powf(alpha) / gamma(alpha + 1.0) * integral
}

/// As [`caputo_oracle`], with the `κ`-th derivative of `g` taken by finite differences.
pub fn caputo_oracle_fd<F>(g: F, x: f64, zeta: FractionalOrder) -> f64
where
    F: Fn(f64) -> f64,
{
    let order = zeta.kappa();
    let h = if order == 1 { 1e-5 } else { 1e-4 };
    caputo_oracle(|s| finite_difference(&g, s, order, h), x, zeta)
}

/// First or second derivative by second-order finite differences.
///
/// The stencil is one-sided when `s < 2h` so `g` is never sampled below zero.
pub fn finite_difference(g: &dyn Fn(f64) -> f64, s: f64, order: usize, h: f64) -> f64 {
    let central = s >= 2.0 * h;
    match (order, central) {
        (0, _) => g(s),
        (1, true) => (g(s + h) - g(s - h)) / (2.0 * h),
        (1, false) => (-3.0 * g(s) + 4.0 * g(s + h) - g(s + 2.0 * h)) / (2.0 * h),
        (2, true) => (g(s + h) - 2.0 * g(s) + g(s - h)) / (h * h),
        (2, false) => {
            (2.0 * g(s) - 5.0 * g(s + h) + 4.0 * g(s + 2.0 * h) - g(s + 3.0 * h)) / (h * h)
        }
        _ => {
            let lower = |t: f64| finite_difference(g, t, order - 1, h);
            finite_difference(&lower, s, 1, h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{shifted_caputo, shifted_eval};

    fn order(z: f64) -> FractionalOrder {
        FractionalOrder::new(z).unwrap()
    }

    #[test]
    fn integer_order_is_plain_derivative() {
        let v = caputo_oracle(|s| 2.0 * s, 1.0, order(1.0));
        assert_eq!(v, 2.0);
    }

    #[test]
    fn monomial_identity() {
        let v = caputo_oracle(|_| 1.0, 0.5, order(0.5));
        let expected = 0.5f64.sqrt() / gamma(1.5);
        assert!((v - expected).abs() < 1e-12);
        assert!((expected - 0.7978845608028654).abs() < 1e-12);
    }

    #[test]
    fn fd_oracle_matches_series_for_p3() {
        let g = |s: f64| shifted_eval(3, s, 1.0).unwrap();
        let v = caputo_oracle_fd(g, 0.4, order(0.7));
        let series = shifted_caputo(3, 0.4, 1.0, order(0.7)).unwrap();
        assert!((v - series).abs() <= 1e-6 * series.abs(), "{v} vs {series}");
    }

    #[test]
    fn one_sided_stencils_are_second_order() {
        let g = |s: f64| s.powi(3);
        let d1 = finite_difference(&g, 0.0, 1, 1e-4);
        assert!(d1.abs() < 1e-7);
        let d2 = finite_difference(&g, 0.0, 2, 1e-4);
        assert!(d2.abs() < 1e-6);
        let d2c = finite_difference(&g, 0.5, 2, 1e-4);
        assert!((d2c - 3.0).abs() < 1e-6);
    }
}
