//! Test error on fresh parameter draws and (n, L, seed) sweeps.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Activation;
use crate::system::{CoefficientMap, Discretisation, EvalGrid};
use crate::train::{fit, TrainConfig};

/// Test samples are drawn with `seed + TEST_SEED_OFFSET` so they never
/// coincide with the training draws of the same seed.
pub const TEST_SEED_OFFSET: u64 = 1_000_003;
pub const DEFAULT_TEST_COUNT: usize = 100;
pub const DEFAULT_GRID_RESOLUTION: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub problem: String,
    pub l2_test: f64,
    pub linf_test: f64,
    /// `∫|z − z̃|²` per test sample.
    pub per_sample_l2_sq: Vec<f64>,
    pub per_sample_linf: Vec<f64>,
    pub test_count: usize,
    pub seed: u64,
    pub grid_resolution: usize,
    pub seconds: f64,
}

/// `(∫|z − z̃|², max|z − z̃|)` with trapezoid weights.
pub fn pointwise_errors(weights: &[f64], exact: &[f64], approx: &[f64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut linf: f64 = 0.0;
    for ((w, z), zt) in weights.iter().zip(exact).zip(approx) {
        let e = (z - zt).abs();
        l2 += w * e * e;
        linf = linf.max(e);
    }
    (l2, linf)
}

/// `L²_Te = sqrt(mean_m ∫|z − z̃|²)`, `L∞_Te = max_m max_x |z − z̃|`.
pub fn test_error(
    disc: &Discretisation,
    map: &dyn CoefficientMap,
    test_count: usize,
    seed: u64,
    grid_resolution: usize,
) -> Result<ErrorReport> {
    if test_count == 0 {
        return Err(Error::Input("test count must be at least 1".into()));
    }
    let start = Instant::now();
    let grid = disc.uniform_grid(grid_resolution)?;
    let weights = grid.trapezoid_weights();
    let samples = disc.problem().sampler.sample(test_count, seed.wrapping_add(TEST_SEED_OFFSET));
    let errors: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|p| sample_error(disc, map, p, &grid, &weights))
        .collect::<Result<_>>()?;
    let (per_sample_l2_sq, per_sample_linf): (Vec<f64>, Vec<f64>) = errors.into_iter().unzip();
    let l2_test = (per_sample_l2_sq.iter().sum::<f64>() / test_count as f64).sqrt();
    let linf_test = per_sample_linf.iter().copied().fold(0.0, f64::max);
    Ok(ErrorReport {
        problem: disc.problem().name.clone(),
        l2_test,
        linf_test,
        per_sample_l2_sq,
        per_sample_linf,
        test_count,
        seed,
        grid_resolution,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn sample_error(
    disc: &Discretisation,
    map: &dyn CoefficientMap,
    params: &[f64],
    grid: &EvalGrid,
    weights: &[f64],
) -> Result<(f64, f64)> {
    let omega = map.coefficients(disc, params)?;
    let approx = disc.evaluate(&omega, grid)?;
    let exact = disc.exact_on(params, grid);
    Ok(pointwise_errors(weights, &exact, &approx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub hidden: Vec<usize>,
    pub samples: Vec<usize>,
    pub seeds: Vec<u64>,
    pub activation: Activation,
    pub epochs: usize,
    pub adam_epochs: usize,
    pub adam_lr: f64,
    pub test_count: usize,
    pub grid_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub l: usize,
    pub seed: u64,
    pub l2_te: f64,
    pub linf_te: f64,
    pub final_loss: f64,
    pub seconds: f64,
    pub status: String,
}

/// Seed of one sweep cell: the base seed mixed with the cell coordinates.
pub fn cell_seed(seed: u64, n: usize, l: usize) -> u64 {
    let mut h = (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (l as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 31;
    seed.wrapping_add(h)
}

/// One trained model per `(n, L, seed)` in axis order. A failing cell is
/// recorded with its error as status.
pub fn sweep(disc: &Discretisation, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.hidden.is_empty() || config.samples.is_empty() || config.seeds.is_empty() {
        return Err(Error::Config("sweep axes must be non-empty".into()));
    }
    let mut rows = Vec::new();
    for &n in &config.hidden {
        for &l in &config.samples {
            for &seed in &config.seeds {
                rows.push(sweep_cell(disc, config, n, l, seed));
            }
        }
    }
    Ok(rows)
}

fn sweep_cell(disc: &Discretisation, config: &SweepConfig, n: usize, l: usize, seed: u64) -> SweepRow {
    let start = Instant::now();
    let train_cfg = TrainConfig {
        sample_count: l,
        epochs: config.epochs,
        adam_epochs: config.adam_epochs,
        adam_lr: config.adam_lr,
        seed: cell_seed(seed, n, l),
        domain_measure: disc.problem().sampler.measure(),
        ..TrainConfig::default()
    };
    let result = fit(disc, n, config.activation, &train_cfg).and_then(|out| {
        let report = test_error(disc, &out.params, config.test_count, seed, config.grid_resolution)?;
        Ok((out.final_loss, report))
    });
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok((final_loss, report)) => SweepRow {
            n,
            l,
            seed,
            l2_te: report.l2_test,
            linf_te: report.linf_test,
            final_loss,
            seconds,
            status: "ok".into(),
        },
        Err(e) => SweepRow {
            n,
            l,
            seed,
            l2_te: f64::NAN,
            linf_te: f64::NAN,
            final_loss: f64::NAN,
            seconds,
            status: format!("error: {e}").replace([',', '\n'], ";"),
        },
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,L,seed,l2_te,linf_te,final_loss,seconds,status\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{:.3},{}",
            r.n, r.l, r.seed, r.l2_te, r.linf_te, r.final_loss, r.seconds, r.status
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problems::registry_get;
    use crate::system::{ExactProjection, ZeroMap};

    fn disc(name: &str) -> Discretisation {
        Discretisation::with_defaults(Arc::new(registry_get(name).unwrap())).unwrap()
    }

    #[test]
    fn projection_is_below_floor() {
        let d = disc("linear1d");
        let r = test_error(&d, &ExactProjection, 20, 0, 101).unwrap();
        assert!(r.l2_test < 1e-4 && r.linf_test < 1e-4, "{} {}", r.l2_test, r.linf_test);
    }

    #[test]
    fn constant_offset() {
        let d = disc("heat");
        let grid = d.uniform_grid(21).unwrap();
        let w = grid.trapezoid_weights();
        let exact: Vec<f64> = grid.points().map(|p| p[0] * p[1]).collect();
        let shifted: Vec<f64> = exact.iter().map(|z| z + 0.25).collect();
        let (l2, linf) = pointwise_errors(&w, &exact, &shifted);
        assert!((linf - 0.25).abs() < 1e-15);
        // the heat domain is the unit square
        assert!((l2.sqrt() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn zero_model_matches_closed_form() {
        // ∫₀¹ m₁²(1−x)²x^{2m₂} dx = m₁² · 2 / ((2m₂+1)(2m₂+2)(2m₂+3))
        let d = disc("linear1d");
        let r = test_error(&d, &ZeroMap, 30, 4, 2001).unwrap();
        let samples = d.problem().sampler.sample(30, 4 + TEST_SEED_OFFSET);
        let exact: f64 = samples
            .iter()
            .map(|p| {
                let q = 2.0 * p[1];
                p[0] * p[0] * 2.0 / ((q + 1.0) * (q + 2.0) * (q + 3.0))
            })
            .sum::<f64>()
            / 30.0;
        assert!((r.l2_test - exact.sqrt()).abs() < 1e-5 * exact.sqrt(), "{} vs {}", r.l2_test, exact.sqrt());
    }

    #[test]
    fn report_invariants_and_determinism() {
        let d = disc("linear1d");
        let a = test_error(&d, &ZeroMap, 10, 2, 51).unwrap();
        let b = test_error(&d, &ZeroMap, 10, 2, 51).unwrap();
        assert_eq!(a.l2_test, b.l2_test);
        assert_eq!(a.linf_test, a.per_sample_linf.iter().copied().fold(0.0, f64::max));
        assert!(a.l2_test >= 0.0);
        assert!(test_error(&d, &ZeroMap, 0, 2, 51).is_err());
    }

    #[test]
    fn single_cell_sweep() {
        let d = disc("linear1d");
        let cfg = SweepConfig {
            hidden: vec![4],
            samples: vec![10],
            seeds: vec![1],
            activation: Activation::Tanh,
            epochs: 5,
            adam_epochs: 3,
            adam_lr: 1e-3,
            test_count: 5,
            grid_resolution: 21,
        };
        let rows = sweep(&d, &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, "ok");
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("n,L,seed,l2_te,linf_te,final_loss,seconds,status\n4,10,1,"));
    }

    #[test]
    fn failing_cell_is_recorded() {
        let d = disc("linear1d");
        let cfg = SweepConfig {
            hidden: vec![4],
            samples: vec![0, 3],
            seeds: vec![1],
            activation: Activation::Tanh,
            epochs: 2,
            adam_epochs: 1,
            adam_lr: 1e-3,
            test_count: 3,
            grid_resolution: 11,
        };
        let rows = sweep(&d, &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].status.starts_with("error"));
        assert!(rows[0].l2_te.is_nan());
        assert_eq!(rows[1].status, "ok");
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(0, 4, 10), cell_seed(0, 10, 4));
        assert_eq!(cell_seed(7, 4, 10), cell_seed(7, 4, 10));
    }
}
