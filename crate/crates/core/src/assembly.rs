//! Galerkin operators and source functionals.
//!
//! Orientation: every matrix is indexed `[test k][trial j]`, so row `k` of a
//! residual is `∫ (L z_N − f) P_k`. For example `H[k][j] = ∫ (D^ζ P_j) P_k`
//! and `M[k][j] = ∫ P_j' P_k`. In 1-D the advection derivative stays on the
//! trial function; in 2-D the diffusion term is integrated by parts (boundary
//! terms vanish for the Dirichlet basis).
//!
//! Tensor coefficients are stored time-major: `ω[j_t * n_s + j_s]`. A term
//! `c · A ⊗ B` acts on the coefficient grid `Ω` as `c · A Ω Bᵀ`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::legendre::{BasisSpec, FractionalOrder};
use crate::quadrature::QuadratureRule;

/// 1-D Galerkin matrices and the basis tables they were built from.
#[derive(Debug, Clone)]
pub struct AssembledSystem1D {
    /// Fractional operator, `∫ (D^ζ P_j) P_k`.
    pub h: DMatrix<f64>,
    /// First-derivative operator, `∫ P_j' P_k`.
    pub m: DMatrix<f64>,
    /// Stiffness, `∫ P_j' P_k'`.
    pub k: DMatrix<f64>,
    /// Mass, `∫ P_j P_k`.
    pub q: DMatrix<f64>,
    basis: BasisSpec,
    zeta: FractionalOrder,
    rule: QuadratureRule,
    // [node][trial]
    values: DMatrix<f64>,
    derivs: DMatrix<f64>,
}

impl AssembledSystem1D {
    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn zeta(&self) -> FractionalOrder {
        self.zeta
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Number of trial functions.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Trial function values at the quadrature nodes, `[node][trial]`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Trial function derivatives at the quadrature nodes, `[node][trial]`.
    pub fn derivs(&self) -> &DMatrix<f64> {
        &self.derivs
    }

    /// `H + v̂ M`.
    pub fn linear_operator(&self, advection: f64) -> DMatrix<f64> {
        &self.h + &self.m * advection
    }

    /// `Q^a[k][j] = ∫ a P_j P_k`, with `a` given at the quadrature nodes.
    pub fn weighted_mass(&self, weight_at_nodes: &[f64]) -> Result<DMatrix<f64>> {
        if weight_at_nodes.len() != self.rule.degree() {
            return Err(Error::Input(format!(
                "weight has {} node values, rule has {} nodes",
                weight_at_nodes.len(),
                self.rule.degree()
            )));
        }
        let scaled: Vec<f64> = self
            .rule
            .weights()
            .iter()
            .zip(weight_at_nodes)
            .map(|(w, a)| w * a)
            .collect();
        Ok(weighted_gram(&self.values, &scaled, &self.values))
    }

    /// `z_N(x_q) = Σ_j ω_j P_j(x_q)` at every node.
    pub fn trial_at_nodes(&self, omega: &DVector<f64>) -> DVector<f64> {
        &self.values * omega
    }

    /// L² projection of `g` onto the trial span.
    pub fn project<F: Fn(f64) -> f64>(&self, g: F) -> Result<DVector<f64>> {
        let rhs = assemble_source_1d(self, g)?;
        solve_lu(&self.q, &rhs)
    }
}

/// `Aᵀ diag(w) B` for `[node][function]` tables.
fn weighted_gram(a: &DMatrix<f64>, w: &[f64], b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut scaled = b.clone();
    for (q, &wq) in w.iter().enumerate() {
        scaled.row_mut(q).scale_mut(wq);
    }
    a.transpose() * scaled
}

/// Build `H`, `M`, `K` and `Q` with the supplied rule.
pub fn assemble_1d(
    basis: &BasisSpec,
    zeta: FractionalOrder,
    rule: &QuadratureRule,
) -> Result<AssembledSystem1D> {
    check_rule(basis, rule)?;
    let nodes = rule.nodes();
    let dim = basis.dim();
    let rows = |f: &dyn Fn(f64) -> Vec<f64>| {
        let data: Vec<f64> = nodes.iter().flat_map(|&x| f(x)).collect();
        DMatrix::from_row_slice(nodes.len(), dim, &data)
    };
    let values = rows(&|x| basis.values_at(x));
    let derivs = rows(&|x| basis.derivs_at(x));
    let caputo = rows(&|x| basis.caputo_at(x, zeta));
    let w = rule.weights();
    let h = weighted_gram(&values, w, &caputo);
    let m = weighted_gram(&values, w, &derivs);
    let k = weighted_gram(&derivs, w, &derivs);
    let q = weighted_gram(&values, w, &values);
    for (name, mat) in [("H", &h), ("M", &m), ("K", &k), ("Q", &q)] {
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite entry in assembled {name}")));
        }
    }
    Ok(AssembledSystem1D {
        h,
        m,
        k,
        q,
        basis: basis.clone(),
        zeta,
        rule: rule.clone(),
        values,
        derivs,
    })
}

fn check_rule(basis: &BasisSpec, rule: &QuadratureRule) -> Result<()> {
    let (a, b) = (basis.domain_length(), rule.domain_length());
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::Input(format!("basis domain {a} does not match rule domain {b}")));
    }
    Ok(())
}

/// `F[k] = ∫ f P_k`.
pub fn assemble_source_1d<F: Fn(f64) -> f64>(sys: &AssembledSystem1D, f: F) -> Result<DVector<f64>> {
    let rule = sys.rule();
    let mut weighted = Vec::with_capacity(rule.degree());
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Input(format!("forcing is not finite at node x = {x}")));
        }
        weighted.push(w * v);
    }
    Ok(sys.values.tr_mul(&DVector::from_vec(weighted)))
}

/// `(H + v̂ M) ω − F`.
pub fn residual_linear(
    sys: &AssembledSystem1D,
    advection: f64,
    omega: &DVector<f64>,
    source: &DVector<f64>,
) -> DVector<f64> {
    &sys.h * omega + (&sys.m * omega) * advection - source
}

/// A pointwise nonlinearity `N(z, z')` with its partial derivatives.
pub trait Nonlinearity: Send + Sync {
    fn value(&self, z: f64, dz: f64) -> f64;
    /// `(∂N/∂z, ∂N/∂z')`.
    fn partials(&self, z: f64, dz: f64) -> (f64, f64);
}

/// `N(z) = z³`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cubic;

impl Nonlinearity for Cubic {
    fn value(&self, z: f64, _dz: f64) -> f64 {
        z * z * z
    }

    fn partials(&self, z: f64, _dz: f64) -> (f64, f64) {
        (3.0 * z * z, 0.0)
    }
}

/// `N(z, z') = v̂ z'`; the linear advection term routed through quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Advection(pub f64);

impl Nonlinearity for Advection {
    fn value(&self, _z: f64, dz: f64) -> f64 {
        self.0 * dz
    }

    fn partials(&self, _z: f64, _dz: f64) -> (f64, f64) {
        (0.0, self.0)
    }
}

fn nodal_state(sys: &AssembledSystem1D, omega: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    (&sys.values * omega, &sys.derivs * omega)
}

/// `H ω + ∫ N(z_N, z_N') P_k − F`, the integral taken with the system's rule.
pub fn residual_nonlinear(
    sys: &AssembledSystem1D,
    nonlinearity: &dyn Nonlinearity,
    omega: &DVector<f64>,
    source: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (z, dz) = nodal_state(sys, omega);
    let mut weighted = DVector::zeros(z.len());
    for (q, &w) in sys.rule.weights().iter().enumerate() {
        let n = nonlinearity.value(z[q], dz[q]);
        if !n.is_finite() {
            return Err(Error::Input(format!(
                "nonlinearity is not finite at node x = {}",
                sys.rule.nodes()[q]
            )));
        }
        weighted[q] = w * n;
    }
    Ok(&sys.h * omega + sys.values.tr_mul(&weighted) - source)
}

/// Coefficient Jacobian of [`residual_nonlinear`].
pub fn jacobian_nonlinear(
    sys: &AssembledSystem1D,
    nonlinearity: &dyn Nonlinearity,
    omega: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let (z, dz) = nodal_state(sys, omega);
    let nq = z.len();
    let mut wz = Vec::with_capacity(nq);
    let mut wdz = Vec::with_capacity(nq);
    for (q, &w) in sys.rule.weights().iter().enumerate() {
        let (pz, pdz) = nonlinearity.partials(z[q], dz[q]);
        if !(pz.is_finite() && pdz.is_finite()) {
            return Err(Error::Input(format!(
                "nonlinearity derivative is not finite at node x = {}",
                sys.rule.nodes()[q]
            )));
        }
        wz.push(w * pz);
        wdz.push(w * pdz);
    }
    Ok(&sys.h + weighted_gram(&sys.values, &wz, &sys.values) + weighted_gram(&sys.values, &wdz, &sys.derivs))
}

/// One `coeff · time ⊗ space` term.
#[derive(Debug, Clone)]
pub struct KronTerm {
    pub coeff: f64,
    pub time: DMatrix<f64>,
    pub space: DMatrix<f64>,
}

/// A sum of Kronecker terms applied factor-wise to a coefficient grid.
#[derive(Debug, Clone)]
pub struct KronOperator {
    n_time: usize,
    n_space: usize,
    terms: Vec<KronTerm>,
}

impl KronOperator {
    pub fn new(n_time: usize, n_space: usize, terms: Vec<KronTerm>) -> Result<Self> {
        for t in &terms {
            if t.time.shape() != (n_time, n_time) || t.space.shape() != (n_space, n_space) {
                return Err(Error::Input("Kronecker factor shape mismatch".into()));
            }
        }
        Ok(Self { n_time, n_space, terms })
    }

    pub fn dim(&self) -> usize {
        self.n_time * self.n_space
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    fn grid(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_time, self.n_space, v.as_slice())
    }

    fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(m.len(), m.transpose().iter().copied())
    }

    /// `Σ c · A Ω Bᵀ`.
    pub fn apply(&self, omega: &DVector<f64>) -> DVector<f64> {
        let grid = self.grid(omega);
        let mut out = DMatrix::zeros(self.n_time, self.n_space);
        for t in &self.terms {
            out += (&t.time * &grid * t.space.transpose()) * t.coeff;
        }
        Self::flatten(&out)
    }

    /// `Σ c · Aᵀ R B`.
    pub fn apply_transpose(&self, r: &DVector<f64>) -> DVector<f64> {
        let grid = self.grid(r);
        let mut out = DMatrix::zeros(self.n_time, self.n_space);
        for t in &self.terms {
            out += (t.time.tr_mul(&grid) * &t.space) * t.coeff;
        }
        Self::flatten(&out)
    }

    /// The explicit `(n_t n_s) × (n_t n_s)` matrix.
    pub fn materialize(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for t in &self.terms {
            out += t.time.kronecker(&t.space) * t.coeff;
        }
        out
    }
}

/// Coefficients of `D^ζ_t z − ν z_ss + b z_s`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Coefficients2D {
    /// `ν`.
    pub diffusion: f64,
    /// Constant drift `b`; ignored when `time_drift` is present.
    pub drift: f64,
    /// Time-dependent drift `b(x₁)` at the time quadrature nodes.
    pub time_drift: Option<Vec<f64>>,
}

/// Tensor-product Galerkin system on `[0, T] × [0, X]`.
#[derive(Debug, Clone)]
pub struct AssembledSystem2D {
    pub time: Arc<AssembledSystem1D>,
    pub space: Arc<AssembledSystem1D>,
    pub operator: KronOperator,
}

pub fn assemble_2d(
    time_basis: &BasisSpec,
    space_basis: &BasisSpec,
    zeta: FractionalOrder,
    time_rule: &QuadratureRule,
    space_rule: &QuadratureRule,
    coefficients: &Coefficients2D,
) -> Result<AssembledSystem2D> {
    let time = Arc::new(assemble_1d(time_basis, zeta, time_rule)?);
    // the spatial Caputo table is never used; integer order keeps it cheap and finite
    let space = Arc::new(assemble_1d(space_basis, FractionalOrder::new(1.0)?, space_rule)?);
    let operator = kron_operator(&time, &space, coefficients)?;
    Ok(AssembledSystem2D { time, space, operator })
}

fn kron_operator(
    time: &AssembledSystem1D,
    space: &AssembledSystem1D,
    c: &Coefficients2D,
) -> Result<KronOperator> {
    let mut terms = vec![KronTerm { coeff: 1.0, time: time.h.clone(), space: space.q.clone() }];
    if c.diffusion != 0.0 {
        terms.push(KronTerm { coeff: c.diffusion, time: time.q.clone(), space: space.k.clone() });
    }
    match &c.time_drift {
        Some(b) => terms.push(KronTerm { coeff: 1.0, time: time.weighted_mass(b)?, space: space.m.clone() }),
        None if c.drift != 0.0 => {
            terms.push(KronTerm { coeff: c.drift, time: time.q.clone(), space: space.m.clone() })
        }
        None => {}
    }
    KronOperator::new(time.dim(), space.dim(), terms)
}

impl AssembledSystem2D {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Same factor matrices with different coefficients (e.g. a per-sample drift field).
    pub fn operator_with(&self, coefficients: &Coefficients2D) -> Result<KronOperator> {
        kron_operator(&self.time, &self.space, coefficients)
    }

    /// L² projection of `g(x₁, x₂)` onto the tensor trial span.
    pub fn project<F: Fn(f64, f64) -> f64>(&self, g: F) -> Result<DVector<f64>> {
        let rhs = assemble_source_2d(self, g)?;
        let b = DMatrix::from_row_slice(self.time.dim(), self.space.dim(), rhs.as_slice());
        let qt = self.time.q.clone().lu();
        let qs = self.space.q.clone().lu();
        let left = qt
            .solve(&b)
            .ok_or_else(|| Error::Numerical("singular time mass matrix".into()))?;
        let grid = qs
            .solve(&left.transpose())
            .ok_or_else(|| Error::Numerical("singular space mass matrix".into()))?
            .transpose();
        Ok(KronOperator::flatten(&grid))
    }
}

/// `F[k_t, k_s] = ∫∫ f P_{k_t}(x₁) P_{k_s}(x₂)`, time-major.
pub fn assemble_source_2d<F: Fn(f64, f64) -> f64>(sys: &AssembledSystem2D, f: F) -> Result<DVector<f64>> {
    let (tr, sr) = (sys.time.rule(), sys.space.rule());
    let mut grid = DMatrix::zeros(tr.degree(), sr.degree());
    for (i, (&t, &wt)) in tr.nodes().iter().zip(tr.weights()).enumerate() {
        for (j, (&x, &wx)) in sr.nodes().iter().zip(sr.weights()).enumerate() {
            let v = f(t, x);
            if !v.is_finite() {
                return Err(Error::Input(format!("forcing is not finite at node (x1, x2) = ({t}, {x})")));
            }
            grid[(i, j)] = wt * wx * v;
        }
    }
    let out = sys.time.values().tr_mul(&grid) * sys.space.values();
    Ok(KronOperator::flatten(&out))
}

/// Evaluate a 2-D trial expansion on a grid of points, `[t][x]`.
pub fn evaluate_2d(
    time: &BasisSpec,
    space: &BasisSpec,
    omega: &[f64],
    t_points: &[f64],
    x_points: &[f64],
) -> DMatrix<f64> {
    let (nt, ns) = (time.dim(), space.dim());
    let table = |b: &BasisSpec, pts: &[f64], n: usize| {
        let data: Vec<f64> = pts.iter().flat_map(|&p| b.values_at(p)).collect();
        DMatrix::from_row_slice(pts.len(), n, &data)
    };
    let vt = table(time, t_points, nt);
    let vs = table(space, x_points, ns);
    let grid = DMatrix::from_row_slice(nt, ns, omega);
    vt * grid * vs.transpose()
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve_lu(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular Galerkin system".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution of Galerkin system".into()));
    }
    Ok(x)
}

/// Row-major CSV dump at full precision.
pub fn write_matrix_csv<W: Write>(mat: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    for i in 0..mat.nrows() {
        let row: Vec<String> = (0..mat.ncols()).map(|j| format!("{:e}", mat[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
