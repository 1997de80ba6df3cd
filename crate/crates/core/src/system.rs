//! A problem discretised at a given basis count and quadrature degree.
//!
//! Parameter-independent operators are assembled once and shared; a drift
//! that depends on the sample gets its own operator per sample.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{
    assemble_1d, assemble_2d, assemble_source_1d, assemble_source_2d, jacobian_nonlinear,
    residual_nonlinear, solve_lu, AssembledSystem1D, AssembledSystem2D, Coefficients2D, KronOperator,
    Nonlinearity,
};
use crate::error::{Error, Result};
use crate::legendre::BasisSpec;
use crate::model::MlpParams;
use crate::problems::{Drift, Equation, Geometry, ProblemSpec};
use crate::quadrature::gauss_legendre_rule;

const NEWTON_MAX_ITER: usize = 50;

/// The Galerkin residual `r(ω)` of one parameter sample.
#[derive(Clone)]
pub enum SampleResidual {
    /// `A ω − F`.
    Dense { op: Arc<DMatrix<f64>>, source: DVector<f64> },
    /// `H ω + ∫ N(z, z') P_k − F`.
    Nonlinear { system: Arc<AssembledSystem1D>, nonlinearity: Arc<dyn Nonlinearity>, source: DVector<f64> },
    /// `Σ c A Ω Bᵀ − F`.
    Kron { op: Arc<KronOperator>, source: DVector<f64> },
}

impl SampleResidual {
    pub fn source(&self) -> &DVector<f64> {
        match self {
            Self::Dense { source, .. } | Self::Nonlinear { source, .. } | Self::Kron { source, .. } => source,
        }
    }

    pub fn residual(&self, omega: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Self::Dense { op, source } => Ok(op.as_ref() * omega - source),
            Self::Nonlinear { system, nonlinearity, source } => {
                residual_nonlinear(system, nonlinearity.as_ref(), omega, source)
            }
            Self::Kron { op, source } => Ok(op.apply(omega) - source),
        }
    }

    /// `J(ω)ᵀ r`.
    pub fn pullback(&self, omega: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Self::Dense { op, .. } => Ok(op.tr_mul(r)),
            Self::Nonlinear { system, nonlinearity, .. } => {
                Ok(jacobian_nonlinear(system, nonlinearity.as_ref(), omega)?.tr_mul(r))
            }
            Self::Kron { op, .. } => Ok(op.apply_transpose(r)),
        }
    }

    pub fn jacobian(&self, omega: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self {
            Self::Dense { op, .. } => Ok(op.as_ref().clone()),
            Self::Nonlinear { system, nonlinearity, .. } => jacobian_nonlinear(system, nonlinearity.as_ref(), omega),
            Self::Kron { op, .. } => Ok(op.materialize()),
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, Self::Nonlinear { .. })
    }
}

#[derive(Clone)]
enum Galerkin {
    OneD { system: Arc<AssembledSystem1D>, op: Option<Arc<DMatrix<f64>>> },
    TwoD { system: Arc<AssembledSystem2D>, op: Option<Arc<KronOperator>> },
}

#[derive(Clone)]
pub struct Discretisation {
    problem: Arc<ProblemSpec>,
    basis_n: usize,
    quad_degree: usize,
    galerkin: Galerkin,
}

impl Discretisation {
    pub fn new(problem: Arc<ProblemSpec>, basis_n: usize, quad_degree: usize) -> Result<Self> {
        if basis_n < 3 {
            return Err(Error::Config(format!("basis count must be at least 3, got {basis_n}")));
        }
        if quad_degree == 0 {
            return Err(Error::Config("quadrature degree must be at least 1".into()));
        }
        let galerkin = match (problem.geometry, &problem.equation) {
            (Geometry::Interval { length }, Equation::Linear1D { advection }) => {
                let system = Arc::new(one_d(length, basis_n, quad_degree, &problem)?);
                let op = Arc::new(system.linear_operator(*advection));
                Galerkin::OneD { system, op: Some(op) }
            }
            (Geometry::Interval { length }, Equation::Nonlinear1D { .. }) => {
                Galerkin::OneD { system: Arc::new(one_d(length, basis_n, quad_degree, &problem)?), op: None }
            }
            (Geometry::Rectangle { time_length, space_length }, Equation::SpaceTime { diffusion, drift }) => {
                let tb = BasisSpec::dirichlet(time_length, basis_n)?;
                let sb = BasisSpec::dirichlet(space_length, basis_n)?;
                let tr = gauss_legendre_rule(quad_degree, time_length)?;
                let sr = gauss_legendre_rule(quad_degree, space_length)?;
                let fixed = match drift {
                    Drift::Constant(b) => Some(*b),
                    _ => None,
                };
                let coeffs = Coefficients2D { diffusion: *diffusion, drift: fixed.unwrap_or(0.0), time_drift: None };
                let system = Arc::new(assemble_2d(&tb, &sb, problem.zeta, &tr, &sr, &coeffs)?);
                let op = fixed.map(|_| Arc::new(system.operator.clone()));
                Galerkin::TwoD { system, op }
            }
            _ => {
                return Err(Error::Config(format!(
                    "problem '{}' pairs its geometry with an incompatible equation",
                    problem.name
                )))
            }
        };
        Ok(Self { problem, basis_n, quad_degree, galerkin })
    }

    /// Discretise with the problem's default `N` and `m`.
    pub fn with_defaults(problem: Arc<ProblemSpec>) -> Result<Self> {
        let (n, m) = (problem.defaults.basis_n, problem.defaults.quad_degree);
        Self::new(problem, n, m)
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn basis_n(&self) -> usize {
        self.basis_n
    }

    pub fn quad_degree(&self) -> usize {
        self.quad_degree
    }

    /// Number of spectral coefficients.
    pub fn dim(&self) -> usize {
        match &self.galerkin {
            Galerkin::OneD { system, .. } => system.dim(),
            Galerkin::TwoD { system, .. } => system.dim(),
        }
    }

    pub fn system_1d(&self) -> Option<&AssembledSystem1D> {
        match &self.galerkin {
            Galerkin::OneD { system, .. } => Some(system),
            Galerkin::TwoD { .. } => None,
        }
    }

    pub fn system_2d(&self) -> Option<&AssembledSystem2D> {
        match &self.galerkin {
            Galerkin::TwoD { system, .. } => Some(system),
            Galerkin::OneD { .. } => None,
        }
    }

    /// The time-direction rule nodes (the only direction in 1-D).
    pub fn time_nodes(&self) -> &[f64] {
        match &self.galerkin {
            Galerkin::OneD { system, .. } => system.rule().nodes(),
            Galerkin::TwoD { system, .. } => system.time.rule().nodes(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.problem.sampler.feature_dim(self.time_nodes().len())
    }

    pub fn features(&self, params: &[f64]) -> Vec<f64> {
        self.problem.sampler.features(params, self.time_nodes())
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        let want = self.problem.sampler.dim();
        if params.len() != want {
            return Err(Error::Input(format!(
                "problem '{}' takes {want} parameters, got {}",
                self.problem.name,
                params.len()
            )));
        }
        Ok(())
    }

    /// `F(Υ)`.
    pub fn source(&self, params: &[f64]) -> Result<DVector<f64>> {
        self.check_params(params)?;
        let p = &self.problem;
        match &self.galerkin {
            Galerkin::OneD { system, .. } => assemble_source_1d(system, |x| p.forcing_at(&[x], params)),
            Galerkin::TwoD { system, .. } => assemble_source_2d(system, |t, x| p.forcing_at(&[t, x], params)),
        }
    }

    pub fn sample_residual(&self, params: &[f64]) -> Result<SampleResidual> {
        let source = self.source(params)?;
        Ok(match (&self.galerkin, &self.problem.equation) {
            (Galerkin::OneD { op: Some(op), .. }, _) => SampleResidual::Dense { op: op.clone(), source },
            (Galerkin::OneD { system, op: None }, Equation::Nonlinear1D { nonlinearity }) => {
                SampleResidual::Nonlinear { system: system.clone(), nonlinearity: nonlinearity.clone(), source }
            }
            (Galerkin::TwoD { op: Some(op), .. }, _) => SampleResidual::Kron { op: op.clone(), source },
            (Galerkin::TwoD { system, op: None }, Equation::SpaceTime { diffusion, drift }) => {
                let nodes = system.time.rule().nodes();
                let field: Vec<f64> = nodes.iter().map(|&t| drift.at(t, params)).collect();
                let coeffs = Coefficients2D { diffusion: *diffusion, drift: 0.0, time_drift: Some(field) };
                SampleResidual::Kron { op: Arc::new(system.operator_with(&coeffs)?), source }
            }
            _ => unreachable!("validated in Discretisation::new"),
        })
    }

    /// Classical Galerkin solve for one parameter value: LU for linear
    /// problems, Newton from the linear part otherwise.
    pub fn direct_solve(&self, params: &[f64]) -> Result<DVector<f64>> {
        let res = self.sample_residual(params)?;
        let zero = DVector::zeros(self.dim());
        let jac = res.jacobian(&zero)?;
        let mut omega = solve_lu(&jac, res.source())?;
        if res.is_linear() {
            return Ok(omega);
        }
        let scale = res.source().norm().max(1.0);
        for _ in 0..NEWTON_MAX_ITER {
            let r = res.residual(&omega)?;
            if r.norm() <= 1e-12 * scale {
                return Ok(omega);
            }
            omega -= solve_lu(&res.jacobian(&omega)?, &r)?;
        }
        Err(Error::Numerical(format!("Newton iteration did not converge for parameters {params:?}")))
    }

    /// L² projection of the exact solution onto the trial span.
    pub fn project_exact(&self, params: &[f64]) -> Result<DVector<f64>> {
        self.check_params(params)?;
        let p = &self.problem;
        match &self.galerkin {
            Galerkin::OneD { system, .. } => system.project(|x| p.exact_at(&[x], params)),
            Galerkin::TwoD { system, .. } => system.project(|t, x| p.exact_at(&[t, x], params)),
        }
    }

    fn bases(&self) -> Vec<&BasisSpec> {
        match &self.galerkin {
            Galerkin::OneD { system, .. } => vec![system.basis()],
            Galerkin::TwoD { system, .. } => vec![system.time.basis(), system.space.basis()],
        }
    }

    /// Basis tables for a tensor grid; each axis must lie inside the domain.
    pub fn grid(&self, axes: Vec<Vec<f64>>) -> Result<EvalGrid> {
        let bases = self.bases();
        if axes.len() != bases.len() {
            return Err(Error::Input(format!("grid has {} axes, problem has {}", axes.len(), bases.len())));
        }
        let mut tables = Vec::with_capacity(axes.len());
        for (axis, basis) in axes.iter().zip(&bases) {
            let len = basis.domain_length();
            if let Some(x) = axis.iter().find(|&&x| !(x >= 0.0 && x <= len)) {
                return Err(Error::Input(format!("grid point {x} outside [0, {len}]")));
            }
            let data: Vec<f64> = axis.iter().flat_map(|&x| basis.values_at(x)).collect();
            tables.push(DMatrix::from_row_slice(axis.len(), basis.dim(), &data));
        }
        Ok(EvalGrid { axes, tables })
    }

    /// `resolution` equispaced points per axis, endpoints included.
    pub fn uniform_grid(&self, resolution: usize) -> Result<EvalGrid> {
        if resolution < 2 {
            return Err(Error::Config(format!("grid resolution must be at least 2, got {resolution}")));
        }
        let axes = self
            .problem
            .geometry
            .lengths()
            .into_iter()
            .map(|len| (0..resolution).map(|i| len * i as f64 / (resolution - 1) as f64).collect())
            .collect();
        self.grid(axes)
    }

    /// `z̃ = Σ ω_k P_k` on the grid, row-major with time outermost.
    pub fn evaluate(&self, omega: &DVector<f64>, grid: &EvalGrid) -> Result<Vec<f64>> {
        if omega.len() != self.dim() {
            return Err(Error::Input(format!("expected {} coefficients, got {}", self.dim(), omega.len())));
        }
        Ok(match grid.tables.as_slice() {
            [v] => (v * omega).as_slice().to_vec(),
            [vt, vs] => {
                let w = DMatrix::from_row_slice(vt.ncols(), vs.ncols(), omega.as_slice());
                let out = vt * w * vs.transpose();
                out.transpose().as_slice().to_vec()
            }
            _ => unreachable!("grids are 1-D or 2-D"),
        })
    }

    /// Exact solution on the grid, same layout as [`evaluate`](Self::evaluate).
    pub fn exact_on(&self, params: &[f64], grid: &EvalGrid) -> Vec<f64> {
        grid.points().map(|pt| self.problem.exact_at(&pt, params)).collect()
    }
}

fn one_d(length: f64, n: usize, m: usize, problem: &ProblemSpec) -> Result<AssembledSystem1D> {
    let basis = BasisSpec::dirichlet(length, n)?;
    let rule = gauss_legendre_rule(m, length)?;
    assemble_1d(&basis, problem.zeta, &rule)
}

/// A tensor grid with the trial functions tabulated on each axis.
#[derive(Debug, Clone)]
pub struct EvalGrid {
    axes: Vec<Vec<f64>>,
    tables: Vec<DMatrix<f64>>,
}

impl EvalGrid {
    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order, first axis outermost.
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let n = self.len();
        (0..n).map(move |mut flat| {
            let mut pt = vec![0.0; self.axes.len()];
            for (d, axis) in self.axes.iter().enumerate().rev() {
                pt[d] = axis[flat % axis.len()];
                flat /= axis.len();
            }
            pt
        })
    }

    /// Tensor trapezoid weights matching [`points`](Self::points).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self.axes.iter().map(|a| trapezoid(a)).collect();
        let mut out = vec![1.0];
        for w in &per_axis {
            out = out.iter().flat_map(|a| w.iter().map(move |b| a * b)).collect();
        }
        out
    }
}

fn trapezoid(axis: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; axis.len()];
    for i in 1..axis.len() {
        let h = 0.5 * (axis[i] - axis[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// Anything that produces spectral coefficients for a parameter sample.
pub trait CoefficientMap: Sync {
    fn coefficients(&self, disc: &Discretisation, params: &[f64]) -> Result<DVector<f64>>;
}

impl CoefficientMap for MlpParams {
    fn coefficients(&self, disc: &Discretisation, params: &[f64]) -> Result<DVector<f64>> {
        if self.output_dim() != disc.dim() {
            return Err(Error::Input(format!(
                "network outputs {} coefficients, discretisation needs {}",
                self.output_dim(),
                disc.dim()
            )));
        }
        self.forward(&disc.features(params))
    }
}

/// The classical per-sample Galerkin solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectSolve;

impl CoefficientMap for DirectSolve {
    fn coefficients(&self, disc: &Discretisation, params: &[f64]) -> Result<DVector<f64>> {
        disc.direct_solve(params)
    }
}

/// L² projection of the exact solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactProjection;

impl CoefficientMap for ExactProjection {
    fn coefficients(&self, disc: &Discretisation, params: &[f64]) -> Result<DVector<f64>> {
        disc.project_exact(params)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroMap;

impl CoefficientMap for ZeroMap {
    fn coefficients(&self, disc: &Discretisation, _params: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::zeros(disc.dim()))
    }
}

/// `z̃(·; Υ)` on a grid.
pub fn evaluate_surrogate(
    disc: &Discretisation,
    map: &dyn CoefficientMap,
    params: &[f64],
    grid: &EvalGrid,
) -> Result<Vec<f64>> {
    let omega = map.coefficients(disc, params)?;
    disc.evaluate(&omega, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::evaluate_2d;
    use crate::problems::registry_get;

    fn disc(name: &str) -> Discretisation {
        Discretisation::with_defaults(Arc::new(registry_get(name).unwrap())).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn direct_solve_reproduces_linear_solution() {
        let d = disc("linear1d");
        let grid = d.uniform_grid(101).unwrap();
        let z = evaluate_surrogate(&d, &DirectSolve, &[4.0, 4.0], &grid).unwrap();
        let err = max_abs_diff(&z, &d.exact_on(&[4.0, 4.0], &grid));
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn direct_solve_residual_vanishes() {
        let d = disc("linear1d");
        let res = d.sample_residual(&[3.3, 4.6]).unwrap();
        let omega = d.direct_solve(&[3.3, 4.6]).unwrap();
        assert!(res.residual(&omega).unwrap().amax() < 1e-10);
    }

    #[test]
    fn newton_solves_cubic_problem() {
        let d = disc("cubic1d");
        let params = [1.5, 2.5];
        let omega = d.direct_solve(&params).unwrap();
        let res = d.sample_residual(&params).unwrap();
        assert!(res.residual(&omega).unwrap().amax() < 1e-10);
        let grid = d.uniform_grid(101).unwrap();
        let err = max_abs_diff(&d.evaluate(&omega, &grid).unwrap(), &d.exact_on(&params, &grid));
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn two_d_direct_solves_track_exact_solutions() {
        for (name, tol) in [("heat", 1e-3), ("advection_const", 1e-2), ("advection_var", 1e-2)] {
            let d = disc(name);
            let params = d.problem().sampler.sample(1, 3).remove(0);
            let grid = d.uniform_grid(21).unwrap();
            let z = evaluate_surrogate(&d, &DirectSolve, &params, &grid).unwrap();
            let exact = d.exact_on(&params, &grid);
            let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = max_abs_diff(&z, &exact) / scale;
            assert!(err < tol, "{name}: relative error {err}");
        }
    }

    #[test]
    fn pullback_is_jacobian_transpose() {
        for name in ["linear1d", "cubic1d", "heat", "advection_var"] {
            let d = disc(name);
            let params = d.problem().sampler.sample(1, 8).remove(0);
            let res = d.sample_residual(&params).unwrap();
            let omega = DVector::from_fn(d.dim(), |i, _| ((i * 7) % 5) as f64 * 0.1 - 0.2);
            let r = DVector::from_fn(d.dim(), |i, _| ((i * 3) % 4) as f64 - 1.5);
            let a = res.pullback(&omega, &r).unwrap();
            let b = res.jacobian(&omega).unwrap().tr_mul(&r);
            assert!((a - b).amax() < 1e-10, "{name}");
        }
    }

    #[test]
    fn zero_map_gives_zero_surrogate() {
        let d = disc("heat");
        let grid = d.uniform_grid(5).unwrap();
        let z = evaluate_surrogate(&d, &ZeroMap, &[6.0, 6.0], &grid).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_d_evaluation_matches_double_sum() {
        let problem = Arc::new(registry_get("heat").unwrap());
        let d = Discretisation::new(problem, 6, 10).unwrap();
        let omega = DVector::from_fn(d.dim(), |i, _| (i as f64 * 0.37).sin());
        let ts: Vec<f64> = (0..5).map(|i| i as f64 * 0.23).collect();
        let xs: Vec<f64> = (0..5).map(|i| 0.05 + i as f64 * 0.2).collect();
        let grid = d.grid(vec![ts.clone(), xs.clone()]).unwrap();
        let got = d.evaluate(&omega, &grid).unwrap();
        let sys = d.system_2d().unwrap();
        let (tb, sb) = (sys.time.basis(), sys.space.basis());
        let reference = evaluate_2d(tb, sb, omega.as_slice(), &ts, &xs);
        let n = tb.dim();
        for (i, &t) in ts.iter().enumerate() {
            for (j, &x) in xs.iter().enumerate() {
                let mut sum = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        sum += omega[a * n + b] * tb.eval(a, t).unwrap() * sb.eval(b, x).unwrap();
                    }
                }
                assert!((got[i * 5 + j] - sum).abs() < 1e-12);
                assert!((reference[(i, j)] - sum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn evaluation_is_linear_in_coefficients() {
        let d = disc("linear1d");
        let grid = d.uniform_grid(11).unwrap();
        let a = DVector::from_fn(d.dim(), |i, _| i as f64);
        let b = DVector::from_fn(d.dim(), |i, _| 1.0 / (i as f64 + 1.0));
        let lhs = d.evaluate(&(&a * 2.0 + &b), &grid).unwrap();
        let za = d.evaluate(&a, &grid).unwrap();
        let zb = d.evaluate(&b, &grid).unwrap();
        for i in 0..lhs.len() {
            assert!((lhs[i] - 2.0 * za[i] - zb[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_outside_domain_is_rejected() {
        let d = disc("linear1d");
        assert!(matches!(d.grid(vec![vec![0.5, 1.2]]), Err(Error::Input(_))));
        assert!(d.grid(vec![vec![0.5], vec![0.5]]).is_err());
    }

    #[test]
    fn trapezoid_weights_integrate_constants() {
        let d = disc("heat_long");
        let grid = d.uniform_grid(11).unwrap();
        let total: f64 = grid.trapezoid_weights().iter().sum();
        assert!((total - 5.0).abs() < 1e-12);
        assert_eq!(grid.points().count(), 121);
        assert_eq!(grid.points().nth(12).unwrap(), vec![0.1, 0.5]);
    }

    #[test]
    fn field_features_have_one_entry_per_time_node() {
        let d = disc("advection_var");
        assert_eq!(d.feature_dim(), 20);
        let params = d.problem().sampler.sample(1, 2).remove(0);
        assert_eq!(d.features(&params).len(), 20);
    }

    #[test]
    fn wrong_parameter_count_is_an_input_error() {
        let d = disc("linear1d");
        assert!(matches!(d.source(&[1.0]), Err(Error::Input(_))));
    }
}
