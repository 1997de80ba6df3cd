//! Shifted and boundary-adapted Legendre polynomials on `[0, X]`.
//!
//! The shifted polynomial `P̂ₙ(x) = Pₙ(2x/X − 1)` is evaluated with the
//! three-term recurrence. The Caputo derivative has no recurrence and is
//! evaluated from its closed-form power series. Both the factorial ratio and
//! `Γ(k+1)/Γ(k+1−ζ)` are advanced term by term; only the first gamma ratio is
//! taken through log-gamma.
//!
//! Boundary-adapted functions are `Pₙ = P̂ₙ + aₙP̂ₙ₊₁ + bₙP̂ₙ₊₂`. A basis of
//! count `N` carries the `N − 1` trial functions `P₀, …, P_{N−2}`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub mod oracle;

/// Boundary condition built into the modified basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// `P(0) = P(X) = 0`.
    Dirichlet,
    /// `P'(0) = P'(X) = 0`.
    Neumann,
}

/// Caputo order `ζ > 0` together with `κ = ⌈ζ⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder {
    zeta: f64,
    kappa: usize,
}

impl FractionalOrder {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::Domain(format!("fractional order must be positive, got {zeta}")));
        }
        let kappa = zeta.ceil() as usize;
        Ok(Self { zeta, kappa })
    }

    #[inline]
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    #[inline]
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    #[inline]
    pub fn is_integer(&self) -> bool {
        self.zeta == self.kappa as f64
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(value: FractionalOrder) -> f64 {
        value.zeta
    }
}

/// A directional modified-Legendre basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    domain_length: f64,
    count: usize,
    bc_kind: BoundaryKind,
    constants: Vec<(f64, f64)>,
}

impl BasisSpec {
    pub fn new(domain_length: f64, count: usize, bc_kind: BoundaryKind) -> Result<Self> {
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::Domain(format!("domain length must be positive, got {domain_length}")));
        }
        if count < 3 {
            return Err(Error::Domain(format!("basis count must be at least 3, got {count}")));
        }
        let constants = (0..count - 1)
            .map(|n| match bc_kind {
                BoundaryKind::Dirichlet => (0.0, -1.0),
                BoundaryKind::Neumann => {
                    let n = n as f64;
                    (0.0, -n * (n + 1.0) / ((n + 2.0) * (n + 3.0)))
                }
            })
            .collect();
        Ok(Self { domain_length, count, bc_kind, constants })
    }

    pub fn dirichlet(domain_length: f64, count: usize) -> Result<Self> {
        Self::new(domain_length, count, BoundaryKind::Dirichlet)
    }

    pub fn neumann(domain_length: f64, count: usize) -> Result<Self> {
        Self::new(domain_length, count, BoundaryKind::Neumann)
    }

    #[inline]
    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// The basis count `N`.
    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    /// Number of trial functions, `N − 1`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.count - 1
    }

    #[inline]
    pub fn bc_kind(&self) -> BoundaryKind {
        self.bc_kind
    }

    /// Modification constants `(aₙ, bₙ)` for trial index `n`.
    pub fn constants(&self, n: usize) -> Result<(f64, f64)> {
        self.constants
            .get(n)
            .copied()
            .ok_or_else(|| Error::Domain(format!("basis index {n} outside 0..{}", self.dim())))
    }

    fn check(&self, n: usize, x: f64) -> Result<(f64, f64)> {
        let ab = self.constants(n)?;
        check_point(x, self.domain_length)?;
        Ok(ab)
    }

    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        let (a, b) = self.check(n, x)?;
        let p = shifted_values(n + 2, x, self.domain_length);
        Ok(p[n] + a * p[n + 1] + b * p[n + 2])
    }

    pub fn deriv(&self, n: usize, x: f64) -> Result<f64> {
        let (a, b) = self.check(n, x)?;
        let (_, d) = shifted_values_and_derivs(n + 2, x, self.domain_length);
        Ok(d[n] + a * d[n + 1] + b * d[n + 2])
    }

    pub fn caputo(&self, n: usize, x: f64, zeta: FractionalOrder) -> Result<f64> {
        let (a, b) = self.check(n, x)?;
        let len = self.domain_length;
        Ok(caputo_series(n, x, len, zeta)
            + a * caputo_series(n + 1, x, len, zeta)
            + b * caputo_series(n + 2, x, len, zeta))
    }

    /// Values of every trial function at `x`.
    pub fn values_at(&self, x: f64) -> Vec<f64> {
        let p = shifted_values(self.count, x, self.domain_length);
        self.combine(&p)
    }

    /// First derivatives of every trial function at `x`.
    pub fn derivs_at(&self, x: f64) -> Vec<f64> {
        let (_, d) = shifted_values_and_derivs(self.count, x, self.domain_length);
        self.combine(&d)
    }

    /// Caputo derivatives of every trial function at `x > 0`.
    pub fn caputo_at(&self, x: f64, zeta: FractionalOrder) -> Vec<f64> {
        let c: Vec<f64> = (0..=self.count)
            .map(|n| caputo_series(n, x, self.domain_length, zeta))
            .collect();
        self.combine(&c)
    }

    fn combine(&self, shifted: &[f64]) -> Vec<f64> {
        self.constants
            .iter()
            .enumerate()
            .map(|(n, &(a, b))| shifted[n] + a * shifted[n + 1] + b * shifted[n + 2])
            .collect()
    }
}

fn check_length(len: f64) -> Result<()> {
    if !(len.is_finite() && len > 0.0) {
        return Err(Error::Domain(format!("domain length must be positive, got {len}")));
    }
    Ok(())
}

fn check_point(x: f64, len: f64) -> Result<()> {
    check_length(len)?;
    let slack = 1e-12 * len;
    if !(x >= -slack && x <= len + slack) {
        return Err(Error::Domain(format!("point {x} outside [0, {len}]")));
    }
    Ok(())
}

/// `P̂ₙ(x)` on `[0, X]`.
pub fn shifted_eval(n: usize, x: f64, len: f64) -> Result<f64> {
    check_point(x, len)?;
    Ok(shifted_values(n, x, len)[n])
}

/// `P̂ₙ'(x)` on `[0, X]`.
pub fn shifted_deriv(n: usize, x: f64, len: f64) -> Result<f64> {
    check_point(x, len)?;
    Ok(shifted_values_and_derivs(n, x, len).1[n])
}

/// Caputo derivative `D^ζ P̂ₙ(x)`; requires `x ≥ 0`.
///
/// At `x = 0` the series is taken termwise: every term with `k > ζ` vanishes,
/// and only an integer order `ζ = k` leaves a constant term.
pub fn shifted_caputo(n: usize, x: f64, len: f64, zeta: FractionalOrder) -> Result<f64> {
    check_length(len)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("Caputo derivative needs x >= 0, got {x}")));
    }
    Ok(caputo_series(n, x, len, zeta))
}

/// `[P̂₀(x), …, P̂ₙ(x)]` via `(k+1)P̃ₖ₊₁ = (2k+1)tP̃ₖ − kP̃ₖ₋₁`.
pub fn shifted_values(n: usize, x: f64, len: f64) -> Vec<f64> {
    let t = 2.0 * x / len - 1.0;
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(t);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p
}

/// Values and first derivatives up to degree `n`.
///
/// Uses `P̃'ₖ₊₁ = P̃'ₖ₋₁ + (2k+1)P̃ₖ`, which stays well defined at the endpoints.
pub fn shifted_values_and_derivs(n: usize, x: f64, len: f64) -> (Vec<f64>, Vec<f64>) {
    let p = shifted_values(n, x, len);
    let scale = 2.0 / len;
    let mut d = vec![0.0; n + 1];
    if n >= 1 {
        d[1] = 1.0;
    }
    for k in 1..n {
        d[k + 1] = d[k - 1] + (2.0 * k as f64 + 1.0) * p[k];
    }
    d.iter_mut().for_each(|v| *v *= scale);
    (p, d)
}

pub(crate) fn caputo_series(n: usize, x: f64, len: f64, zeta: FractionalOrder) -> f64 {
    let kappa = zeta.kappa();
    if kappa > n {
        return 0.0;
    }
    let z = zeta.zeta();
    let nf = n as f64;
    // c_k = (-1)^{n+k} (n+k)! / ((n-k)! (k!)^2), advanced by its term ratio
    let mut coef = if n % 2 == 0 { 1.0 } else { -1.0 };
    for k in 0..kappa {
        let kf = k as f64;
        coef *= -(nf + kf + 1.0) * (nf - kf) / ((kf + 1.0) * (kf + 1.0));
    }
    // Γ(k+1)/Γ(k+1−ζ), seeded at k = κ where k+1−ζ ∈ [1, 2)
    let kf = kappa as f64;
    let mut gamma_ratio = (ln_gamma(kf + 1.0) - ln_gamma(kf + 1.0 - z)).exp();
    let mut sum = 0.0;
    for k in kappa..=n {
        let kf = k as f64;
        let power = kf - z;
        let monomial = if x == 0.0 {
            if power == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            x.powf(power)
        };
        sum += coef * gamma_ratio * monomial / len.powi(k as i32);
        coef *= -(nf + kf + 1.0) * (nf - kf) / ((kf + 1.0) * (kf + 1.0));
        gamma_ratio *= (kf + 1.0) / (kf + 1.0 - z);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_rule;
    use approx::assert_relative_eq;

    fn order(z: f64) -> FractionalOrder {
        FractionalOrder::new(z).unwrap()
    }

    #[test]
    fn shifted_eval_examples() {
        assert_eq!(shifted_eval(0, 0.7, 1.0).unwrap(), 1.0);
        assert_relative_eq!(shifted_eval(5, 1.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(shifted_eval(2, 0.3, 1.0).unwrap(), -0.26, epsilon = 1e-14);
    }

    #[test]
    fn shifted_eval_rejects_bad_domain() {
        assert!(matches!(shifted_eval(2, 0.5, 0.0), Err(Error::Domain(_))));
        assert!(matches!(shifted_eval(2, 0.5, -1.0), Err(Error::Domain(_))));
        assert!(matches!(shifted_eval(2, 1.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(shifted_caputo(2, -0.1, 1.0, order(0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn shifted_deriv_examples() {
        assert_relative_eq!(shifted_deriv(1, 0.4, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(shifted_deriv(0, 0.5, 1.0).unwrap(), 0.0);
        assert_relative_eq!(shifted_deriv(2, 0.3, 1.0).unwrap(), -2.4, epsilon = 1e-14);
    }

    #[test]
    fn shifted_deriv_matches_central_differences() {
        let h = 1e-6;
        for n in 0..=15 {
            for i in 1..20 {
                let x = i as f64 * 0.05 * 2.0;
                let fd = (shifted_eval(n, x + h, 2.0).unwrap() - shifted_eval(n, x - h, 2.0).unwrap())
                    / (2.0 * h);
                let d = shifted_deriv(n, x, 2.0).unwrap();
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "n={n} x={x}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn caputo_examples() {
        assert_eq!(shifted_caputo(1, 0.5, 1.0, order(1.5)).unwrap(), 0.0);
        let expected = 2.0 / statrs::function::gamma::gamma(1.5);
        assert_relative_eq!(shifted_caputo(1, 1.0, 1.0, order(0.5)).unwrap(), expected, max_relative = 1e-13);
        assert_relative_eq!(expected, 2.256758334191025, max_relative = 1e-12);
    }

    #[test]
    fn caputo_at_origin_is_termwise_limit() {
        // no k = ζ term for non-integer order
        assert_eq!(shifted_caputo(4, 0.0, 1.0, order(0.7)).unwrap(), 0.0);
        // integer order: D¹P̂ₙ(0) equals the plain derivative
        for n in 0..8 {
            let d = shifted_deriv(n, 0.0, 1.0).unwrap();
            assert_relative_eq!(shifted_caputo(n, 0.0, 1.0, order(1.0)).unwrap(), d, epsilon = 1e-9);
        }
    }

    #[test]
    fn integer_order_caputo_is_plain_derivative() {
        for n in 0..10 {
            for i in 1..10 {
                let x = 0.1 * i as f64;
                let d = shifted_deriv(n, x, 1.0).unwrap();
                let c = shifted_caputo(n, x, 1.0, order(1.0)).unwrap();
                assert!((c - d).abs() < 1e-9 * d.abs().max(1.0));
            }
        }
    }

    #[test]
    fn fractional_order_kappa() {
        assert_eq!(order(0.3).kappa(), 1);
        assert_eq!(order(1.0).kappa(), 1);
        assert!(order(1.0).is_integer());
        assert_eq!(order(1.5).kappa(), 2);
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(f64::NAN).is_err());
    }

    #[test]
    fn orthogonality_with_degree_20_rule() {
        for &len in &[1.0, 2.5] {
            let rule = gauss_legendre_rule(20, len).unwrap();
            let tables: Vec<Vec<f64>> = rule.nodes().iter().map(|&x| shifted_values(12, x, len)).collect();
            for m in 0..=12 {
                for n in 0..=12 {
                    let ip: f64 = tables.iter().zip(rule.weights()).map(|(p, w)| w * p[m] * p[n]).sum();
                    let expected = if m == n { len / (2.0 * n as f64 + 1.0) } else { 0.0 };
                    assert!((ip - expected).abs() < 1e-10, "m={m} n={n}: {ip}");
                }
            }
        }
    }

    #[test]
    fn basis_spec_validation() {
        assert!(BasisSpec::dirichlet(1.0, 2).is_err());
        assert!(BasisSpec::dirichlet(0.0, 5).is_err());
        let spec = BasisSpec::dirichlet(1.0, 6).unwrap();
        assert_eq!(spec.dim(), 5);
        assert!(matches!(spec.eval(5, 0.5), Err(Error::Domain(_))));
        assert!(matches!(spec.eval(0, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn dirichlet_basis_vanishes_at_endpoints() {
        for &len in &[1.0, 5.0] {
            let spec = BasisSpec::dirichlet(len, 20).unwrap();
            for n in 0..spec.dim() {
                assert!(spec.eval(n, 0.0).unwrap().abs() < 1e-12);
                assert!(spec.eval(n, len).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn neumann_basis_derivative_vanishes_at_endpoints() {
        for &len in &[1.0, 3.0] {
            let spec = BasisSpec::neumann(len, 20).unwrap();
            for n in 0..spec.dim() {
                assert!(spec.deriv(n, 0.0).unwrap().abs() < 1e-10, "n={n}");
                assert!(spec.deriv(n, len).unwrap().abs() < 1e-10, "n={n}");
            }
        }
        let spec = BasisSpec::neumann(1.0, 5).unwrap();
        assert_eq!(spec.constants(1).unwrap(), (0.0, -2.0 / 12.0));
        assert_eq!(spec.deriv(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn modified_caputo_is_linear_combination() {
        let z = order(0.7);
        for kind in [BoundaryKind::Dirichlet, BoundaryKind::Neumann] {
            let spec = BasisSpec::new(1.0, 10, kind).unwrap();
            for n in 0..spec.dim() {
                let x = 0.37;
                let (a, b) = spec.constants(n).unwrap();
                let direct = shifted_caputo(n, x, 1.0, z).unwrap()
                    + a * shifted_caputo(n + 1, x, 1.0, z).unwrap()
                    + b * shifted_caputo(n + 2, x, 1.0, z).unwrap();
                assert_eq!(spec.caputo(n, x, z).unwrap(), direct);
                assert_eq!(spec.caputo_at(x, z)[n], direct);
            }
        }
    }

    #[test]
    fn table_helpers_match_pointwise() {
        let spec = BasisSpec::dirichlet(2.0, 9).unwrap();
        let x = 1.3;
        let v = spec.values_at(x);
        let d = spec.derivs_at(x);
        for n in 0..spec.dim() {
            assert_relative_eq!(v[n], spec.eval(n, x).unwrap(), epsilon = 1e-14);
            assert_relative_eq!(d[n], spec.deriv(n, x).unwrap(), epsilon = 1e-13);
        }
    }
}
