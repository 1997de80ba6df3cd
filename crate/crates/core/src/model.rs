//! Feed-forward coefficient map `Υ ↦ ω` with a hand-written reverse pass.
//!
//! Layer recursion: `ω¹ = W¹Υ + B¹`, `ωʳ = Wʳσ(ωʳ⁻¹) + Bʳ`. The activation is
//! applied between layers only, so the output layer is affine unless the
//! bounded head `C·tanh(·)` is switched on.
//!
//! Parameters flatten layer by layer as `W` (row-major) followed by `B`; the
//! optimizers work on that flat vector.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    /// Unbounded; kept for comparison runs.
    Relu,
    Silu,
}

impl Activation {
    pub const ALL: [Activation; 4] = [Self::Tanh, Self::Sigmoid, Self::Relu, Self::Silu];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Tanh => x.tanh(),
            Self::Sigmoid => sigmoid(x),
            Self::Relu => x.max(0.0),
            Self::Silu => x * sigmoid(x),
        }
    }

    /// `σ'(x)`; relu takes 0 at the kink.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Self::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Self::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Silu => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
        }
    }

    pub fn is_bounded(self) -> bool {
        !matches!(self, Self::Relu | Self::Silu)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Sigmoid => "sigmoid",
            Self::Relu => "relu",
            Self::Silu => "silu",
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown activation '{s}' (tanh, sigmoid, relu, silu)")))
    }
}

/// One affine layer; `weights` is `n_out × n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
}

impl Layer {
    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    widths: Vec<usize>,
    activation: Activation,
    seed: u64,
    layers: Vec<Layer>,
    bounded_head: Option<f64>,
}

/// Gradient of `⟨output, cotangent⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Same layout as [`MlpParams::flat`].
    pub params: Vec<f64>,
    pub input: DVector<f64>,
}

fn check_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 {
        return Err(Error::Input(format!("need at least input and output widths, got {widths:?}")));
    }
    if widths.contains(&0) {
        return Err(Error::Input(format!("layer widths must be positive, got {widths:?}")));
    }
    Ok(())
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(widths: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        check_widths(widths)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let weights = DMatrix::from_fn(n_out, n_in, |_, _| rng.gen_range(-limit..=limit));
                Layer { weights, biases: DVector::zeros(n_out) }
            })
            .collect();
        Ok(Self { widths: widths.to_vec(), activation, seed, layers, bounded_head: None })
    }

    pub fn zeros(widths: &[usize], activation: Activation) -> Result<Self> {
        check_widths(widths)?;
        let layers = widths
            .windows(2)
            .map(|w| Layer { weights: DMatrix::zeros(w[1], w[0]), biases: DVector::zeros(w[1]) })
            .collect();
        Ok(Self { widths: widths.to_vec(), activation, seed: 0, layers, bounded_head: None })
    }

    /// Build from explicit layers; shapes and values are validated.
    pub fn from_layers(layers: Vec<Layer>, activation: Activation, seed: u64) -> Result<Self> {
        let first = layers.first().ok_or_else(|| Error::Input("network has no layers".into()))?;
        let mut widths = vec![first.weights.ncols()];
        for (r, layer) in layers.iter().enumerate() {
            let n_in = *widths.last().unwrap();
            if layer.weights.ncols() != n_in || layer.biases.len() != layer.weights.nrows() {
                return Err(Error::Input(format!("layer {} has inconsistent shape", r + 1)));
            }
            widths.push(layer.weights.nrows());
        }
        check_widths(&widths)?;
        let params = Self { widths, activation, seed, layers, bounded_head: None };
        if params.flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("network parameters must be finite".into()));
        }
        Ok(params)
    }

    /// Squash outputs through `bound · tanh(·)`.
    pub fn with_bounded_head(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::Input(format!("head bound must be positive, got {bound}")));
        }
        self.bounded_head = Some(bound);
        Ok(self)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn bounded_head(&self) -> Option<f64> {
        self.bounded_head
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for i in 0..layer.weights.nrows() {
                out.extend(layer.weights.row(i).iter());
            }
            out.extend(layer.biases.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Input(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut at = 0;
        for layer in &mut self.layers {
            let (rows, cols) = layer.weights.shape();
            for i in 0..rows {
                for j in 0..cols {
                    layer.weights[(i, j)] = flat[at];
                    at += 1;
                }
            }
            for b in layer.biases.iter_mut() {
                *b = flat[at];
                at += 1;
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Input(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<DVector<f64>> {
        self.check_input(input)?;
        let mut a = DVector::from_column_slice(input);
        let last = self.layers.len() - 1;
        for (r, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * &a + &layer.biases;
            if r < last {
                z.apply(|v| *v = self.activation.apply(*v));
            }
            a = z;
        }
        if let Some(c) = self.bounded_head {
            a.apply(|v| *v = c * v.tanh());
        }
        Ok(a)
    }

    /// Pre-activations of every layer.
    fn trace(&self, input: &[f64]) -> Vec<DVector<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = DVector::from_column_slice(input);
        for (r, layer) in self.layers.iter().enumerate() {
            let z = &layer.weights * &a + &layer.biases;
            if r + 1 < self.layers.len() {
                a = z.map(|v| self.activation.apply(v));
            }
            pre.push(z);
        }
        pre
    }

    /// Reverse pass for `⟨forward(input), cotangent⟩`.
    pub fn backward(&self, input: &[f64], cotangent: &DVector<f64>) -> Result<Gradients> {
        let mut params = vec![0.0; self.param_count()];
        let input = self.backward_into(input, cotangent, &mut params)?;
        Ok(Gradients { params, input })
    }

    /// As [`backward`](Self::backward), accumulating into `grad`; returns the input gradient.
    pub fn backward_into(
        &self,
        input: &[f64],
        cotangent: &DVector<f64>,
        grad: &mut [f64],
    ) -> Result<DVector<f64>> {
        self.check_input(input)?;
        if cotangent.len() != self.output_dim() {
            return Err(Error::Input(format!(
                "cotangent has length {}, network output is {}",
                cotangent.len(),
                self.output_dim()
            )));
        }
        if grad.len() != self.param_count() {
            return Err(Error::Input("gradient buffer has the wrong length".into()));
        }
        let pre = self.trace(input);
        let mut g = cotangent.clone();
        if let Some(c) = self.bounded_head {
            for (gi, z) in g.iter_mut().zip(pre.last().unwrap().iter()) {
                let t = z.tanh();
                *gi *= c * (1.0 - t * t);
            }
        }
        let mut end = grad.len();
        let x = DVector::from_column_slice(input);
        for r in (0..self.layers.len()).rev() {
            let layer = &self.layers[r];
            let (rows, cols) = layer.weights.shape();
            let start = end - rows * cols - rows;
            let prev = if r == 0 { x.clone() } else { pre[r - 1].map(|v| self.activation.apply(v)) };
            let (gw, gb) = grad[start..end].split_at_mut(rows * cols);
            for i in 0..rows {
                for j in 0..cols {
                    gw[i * cols + j] += g[i] * prev[j];
                }
                gb[i] += g[i];
            }
            let back = layer.weights.tr_mul(&g);
            if r == 0 {
                return Ok(back);
            }
            g = back.zip_map(&pre[r - 1], |b, z| b * self.activation.derivative(z));
            end = start;
        }
        unreachable!("network has at least one layer")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Checkpoint::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        ckpt.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    widths: Vec<usize>,
    activation: Activation,
    seed: u64,
    layers: Vec<CheckpointLayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounded_head: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    #[serde(rename = "W")]
    w: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<f64>,
}

impl From<&MlpParams> for Checkpoint {
    fn from(p: &MlpParams) -> Self {
        let layers = p
            .layers
            .iter()
            .map(|l| CheckpointLayer {
                w: l.weights.transpose().iter().copied().collect(),
                b: l.biases.iter().copied().collect(),
            })
            .collect();
        Checkpoint {
            widths: p.widths.clone(),
            activation: p.activation,
            seed: p.seed,
            layers,
            bounded_head: p.bounded_head,
        }
    }
}

impl TryFrom<Checkpoint> for MlpParams {
    type Error = Error;

    fn try_from(c: Checkpoint) -> Result<Self> {
        check_widths(&c.widths)?;
        if c.layers.len() + 1 != c.widths.len() {
            return Err(Error::Input(format!(
                "checkpoint has {} layers for widths {:?}",
                c.layers.len(),
                c.widths
            )));
        }
        let mut layers = Vec::with_capacity(c.layers.len());
        for (r, (l, w)) in c.layers.into_iter().zip(c.widths.windows(2)).enumerate() {
            if l.w.len() != w[0] * w[1] || l.b.len() != w[1] {
                return Err(Error::Input(format!("checkpoint layer {} has the wrong size", r + 1)));
            }
            layers.push(Layer {
                weights: DMatrix::from_row_slice(w[1], w[0], &l.w),
                biases: DVector::from_vec(l.b),
            });
        }
        let params = Self::from_layers(layers, c.activation, c.seed)?;
        match c.bounded_head {
            Some(bound) => params.with_bounded_head(bound),
            None => Ok(params),
        }
    }
}
