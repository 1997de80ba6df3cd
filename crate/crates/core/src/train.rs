//! Monte-Carlo residual loss and the Adam → L-BFGS training schedule.
//!
//! The loss over a fixed set of `L` samples is
//! `(|Ω̂|/L) Σ_m ‖r(ω(Υ_m); Υ_m)‖²`. Each sample's cotangent
//! `2(|Ω̂|/L) Jᵀr` is pulled back through the network. Per-sample work runs
//! in parallel; the results are summed in sample order so a run is
//! reproducible bit for bit.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, MlpParams};
use crate::system::{Discretisation, SampleResidual};

pub mod optim;
pub mod sampler;

use optim::{Adam, Evaluated, Lbfgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub sample_count: usize,
    pub epochs: usize,
    pub adam_epochs: usize,
    pub adam_lr: f64,
    pub lbfgs_memory: usize,
    /// L-BFGS iterations inside one epoch.
    pub lbfgs_iterations: usize,
    pub seed: u64,
    /// `|Ω̂|`.
    pub domain_measure: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sample_count: 100,
            epochs: 500,
            adam_epochs: 300,
            adam_lr: 1e-3,
            lbfgs_memory: 10,
            lbfgs_iterations: 20,
            seed: 0,
            domain_measure: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        if self.adam_epochs > self.epochs {
            return Err(Error::Config(format!(
                "adam epochs ({}) exceed total epochs ({})",
                self.adam_epochs, self.epochs
            )));
        }
        if self.lbfgs_iterations == 0 && self.epochs > self.adam_epochs {
            return Err(Error::Config("L-BFGS epochs need at least one iteration each".into()));
        }
        if !(self.adam_lr.is_finite() && self.adam_lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.adam_lr)));
        }
        if !(self.domain_measure.is_finite() && self.domain_measure > 0.0) {
            return Err(Error::Config(format!("domain measure must be positive, got {}", self.domain_measure)));
        }
        Ok(())
    }
}

/// The discrete loss over a fixed sample set.
pub struct Objective {
    features: Vec<Vec<f64>>,
    residuals: Vec<SampleResidual>,
    measure: f64,
}

impl Objective {
    pub fn new(features: Vec<Vec<f64>>, residuals: Vec<SampleResidual>, measure: f64) -> Result<Self> {
        if features.len() != residuals.len() || features.is_empty() {
            return Err(Error::Input(format!(
                "objective needs matching non-empty features and residuals, got {} and {}",
                features.len(),
                residuals.len()
            )));
        }
        Ok(Self { features, residuals, measure })
    }

    /// Precompute features and sources for every parameter sample.
    pub fn from_samples(disc: &Discretisation, samples: &[Vec<f64>], measure: f64) -> Result<Self> {
        let built: Vec<(Vec<f64>, SampleResidual)> = samples
            .par_iter()
            .map(|p| Ok((disc.features(p), disc.sample_residual(p)?)))
            .collect::<Result<_>>()?;
        let (features, residuals) = built.into_iter().unzip();
        Self::new(features, residuals, measure)
    }

    /// Draw `config.sample_count` samples with `config.seed`.
    pub fn for_training(disc: &Discretisation, config: &TrainConfig) -> Result<Self> {
        let samples = disc.problem().sampler.sample(config.sample_count, config.seed);
        Self::from_samples(disc, &samples, config.domain_measure)
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.measure / self.len() as f64
    }

    fn sample_residual(&self, model: &MlpParams, i: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        let omega = model.forward(&self.features[i])?;
        let r = self.residuals[i]
            .residual(&omega)
            .map_err(|e| Error::Training(format!("sample {i}: {e}")))?;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training(format!("non-finite residual for sample {i}")));
        }
        Ok((omega, r))
    }

    pub fn loss(&self, model: &MlpParams) -> Result<f64> {
        let parts: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| self.sample_residual(model, i).map(|(_, r)| r.norm_squared()))
            .collect::<Result<_>>()?;
        Ok(self.scale() * parts.iter().sum::<f64>())
    }

    pub fn loss_and_gradient(&self, model: &MlpParams) -> Result<(f64, Vec<f64>)> {
        let scale = self.scale();
        let n = model.param_count();
        let parts: Vec<(f64, Vec<f64>)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (omega, r) = self.sample_residual(model, i)?;
                let cotangent = self.residuals[i]
                    .pullback(&omega, &r)
                    .map_err(|e| Error::Training(format!("sample {i}: {e}")))?
                    * (2.0 * scale);
                let mut grad = vec![0.0; n];
                model.backward_into(&self.features[i], &cotangent, &mut grad)?;
                Ok((r.norm_squared(), grad))
            })
            .collect::<Result<_>>()?;
        let mut total = 0.0;
        let mut grad = vec![0.0; n];
        for (l, g) in &parts {
            total += l;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        Ok((scale * total, grad))
    }

    fn evaluate_flat(&self, model: &mut MlpParams, flat: &[f64]) -> Result<Evaluated> {
        model.set_flat(flat)?;
        let (value, grad) = self.loss_and_gradient(model)?;
        Ok(Evaluated { value, grad })
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MlpParams,
    /// Loss at the start of each epoch.
    pub history: Vec<f64>,
    /// Loss of the returned parameters.
    pub final_loss: f64,
    pub lbfgs_fallbacks: usize,
    pub seconds: f64,
}

/// `adam_epochs` Adam steps, then L-BFGS for the remaining epochs with up to
/// `lbfgs_iterations` iterations per epoch.
pub fn train(model: MlpParams, objective: &Objective, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let start = Instant::now();
    let mut model = model;
    let mut history = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok(TrainOutcome { params: model, history, final_loss: f64::NAN, lbfgs_fallbacks: 0, seconds: 0.0 });
    }
    let check = |loss: f64, epoch: usize| {
        if loss.is_finite() {
            Ok(())
        } else {
            Err(Error::Training(format!("loss became non-finite at epoch {epoch}")))
        }
    };
    let mut w = model.flat();
    let mut adam = Adam::new(w.len(), config.adam_lr);
    for epoch in 0..config.adam_epochs {
        let (loss, grad) = objective.loss_and_gradient(&model)?;
        check(loss, epoch)?;
        history.push(loss);
        adam.step(&mut w, &grad);
        model.set_flat(&w)?;
    }
    let mut lbfgs = Lbfgs::new(config.lbfgs_memory);
    let mut current = objective.evaluate_flat(&mut model, &w)?;
    for epoch in config.adam_epochs..config.epochs {
        check(current.value, epoch)?;
        history.push(current.value);
        let mut scratch = model.clone();
        for _ in 0..config.lbfgs_iterations {
            let before = current.value;
            current = lbfgs.step(&mut w, &current, |trial| objective.evaluate_flat(&mut scratch, trial))?;
            if current.value == before {
                break;
            }
        }
        model.set_flat(&w)?;
    }
    check(current.value, config.epochs)?;
    Ok(TrainOutcome {
        params: model,
        history,
        final_loss: current.value,
        lbfgs_fallbacks: lbfgs.fallbacks(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Draw samples, initialise a one-hidden-layer network and train it.
/// Both the draws and the initial weights use `config.seed`.
pub fn fit(disc: &Discretisation, hidden: usize, activation: Activation, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let objective = Objective::for_training(disc, config)?;
    let model = MlpParams::init(&[disc.feature_dim(), hidden, disc.dim()], activation, config.seed)?;
    train(model, &objective, config)
}

/// Loss history as `epoch,loss` CSV.
pub fn history_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in history.iter().enumerate() {
        out.push_str(&format!("{i},{l:e}\n"));
    }
    out
}
