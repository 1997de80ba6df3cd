//! Random problem parameters and the network features derived from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre::shifted_values;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterSampler {
    /// Independent uniform components; `lo == hi` pins a component.
    UniformBox { bounds: Vec<(f64, f64)> },
    /// `a(x₁) = Σ_{k=0}^{order} c_k P̂_k(x₁)` with `c_k ~ N(0, std_dev²)` on `[0, length]`.
    /// A sample is the coefficient vector `(c_0, …, c_order)`.
    GaussianRandomField { order: usize, std_dev: f64, length: f64 },
}

impl ParameterSampler {
    pub fn uniform(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("uniform sampler needs at least one component".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("invalid uniform bounds [{lo}, {hi}]")));
            }
        }
        Ok(Self::UniformBox { bounds })
    }

    pub fn gaussian_field(order: usize, std_dev: f64, length: f64) -> Result<Self> {
        if !(std_dev.is_finite() && std_dev > 0.0) {
            return Err(Error::Config(format!("field standard deviation must be positive, got {std_dev}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("field length must be positive, got {length}")));
        }
        Ok(Self::GaussianRandomField { order, std_dev, length })
    }

    /// Length of one parameter vector.
    pub fn dim(&self) -> usize {
        match self {
            Self::UniformBox { bounds } => bounds.len(),
            Self::GaussianRandomField { order, .. } => order + 1,
        }
    }

    /// `|Ω̂|`: product of the non-degenerate interval lengths; 1 for a field.
    pub fn measure(&self) -> f64 {
        match self {
            Self::UniformBox { bounds } => bounds
                .iter()
                .map(|&(lo, hi)| hi - lo)
                .filter(|&w| w > 0.0)
                .product(),
            Self::GaussianRandomField { .. } => 1.0,
        }
    }

    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            Self::UniformBox { bounds } => (0..count)
                .map(|_| {
                    bounds
                        .iter()
                        .map(|&(lo, hi)| {
                            let u: f64 = rng.gen();
                            if lo == hi {
                                lo
                            } else {
                                lo + (hi - lo) * u
                            }
                        })
                        .collect()
                })
                .collect(),
            Self::GaussianRandomField { order, std_dev, .. } => {
                let normal = Normal::new(0.0, *std_dev).expect("validated standard deviation");
                (0..count)
                    .map(|_| (0..=*order).map(|_| normal.sample(&mut rng)).collect())
                    .collect()
            }
        }
    }

    /// Field value `a(t)` for a coefficient sample; `None` for a uniform box.
    pub fn field_value(&self, params: &[f64], t: f64) -> Option<f64> {
        match self {
            Self::GaussianRandomField { order, length, .. } => {
                let p = shifted_values(*order, t, *length);
                Some(p.iter().zip(params).map(|(p, c)| p * c).sum())
            }
            Self::UniformBox { .. } => None,
        }
    }

    /// Theoretical standard deviation of `a(t)`.
    pub fn field_std(&self, t: f64) -> Option<f64> {
        match self {
            Self::GaussianRandomField { order, std_dev, length } => {
                let p = shifted_values(*order, t, *length);
                Some(std_dev * p.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            Self::UniformBox { .. } => None,
        }
    }

    /// Network input for a sample.
    ///
    /// Box components map affinely onto `[−1, 1]` (a pinned component maps to 0).
    /// A field is read at `time_nodes` and divided by its pointwise standard deviation.
    pub fn features(&self, params: &[f64], time_nodes: &[f64]) -> Vec<f64> {
        match self {
            Self::UniformBox { bounds } => bounds
                .iter()
                .zip(params)
                .map(|(&(lo, hi), &v)| if hi > lo { 2.0 * (v - lo) / (hi - lo) - 1.0 } else { 0.0 })
                .collect(),
            Self::GaussianRandomField { .. } => time_nodes
                .iter()
                .map(|&t| self.field_value(params, t).unwrap() / self.field_std(t).unwrap())
                .collect(),
        }
    }

    /// Feature length given the number of time nodes.
    pub fn feature_dim(&self, time_nodes: usize) -> usize {
        match self {
            Self::UniformBox { bounds } => bounds.len(),
            Self::GaussianRandomField { .. } => time_nodes,
        }
    }
}
