//! Dense feed-forward networks with reverse-mode gradients, dropout, the two
//! losses used in training, and Adam.
//!
//! Batches are row-major: one sample per row.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Lower/upper clamp applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    /// Leaky ReLU with slope [`Activation::LEAKY_SLOPE`] for negative inputs.
    LeakyRelu,
    Sigmoid,
    Tanh,
    Linear,
}

impl Activation {
    pub const LEAKY_SLOPE: f64 = 0.01;

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    Self::LEAKY_SLOPE * z
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    Self::LEAKY_SLOPE
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Shape, nonlinearity and output dropout of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    #[serde(default)]
    pub dropout: f64,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
            dropout: 0.0,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }

    pub fn param_count(&self) -> usize {
        self.out_dim * self.in_dim + self.out_dim
    }
}

/// Layer specs for a multilayer perceptron: `hidden` widths share one
/// activation and dropout rate, the output layer has its own activation and
/// no dropout.
pub fn mlp(
    input: usize,
    hidden: &[usize],
    output: usize,
    hidden_activation: Activation,
    output_activation: Activation,
    dropout: f64,
) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input;
    for &h in hidden {
        specs.push(LayerSpec::new(prev, h, hidden_activation).with_dropout(dropout));
        prev = h;
    }
    specs.push(LayerSpec::new(prev, output, output_activation));
    specs
}

/// Checks positivity, dropout range and that dimensions chain.
pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::config("layers", "network needs at least one layer"));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(Error::config(
                format!("layers[{i}]"),
                "dimensions must be positive",
            ));
        }
        if !(0.0..1.0).contains(&s.dropout) {
            return Err(Error::config(
                format!("layers[{i}].dropout"),
                "must lie in [0, 1)",
            ));
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::config(
                format!("layers[{}]", i + 1),
                format!(
                    "in_dim {} does not match previous out_dim {}",
                    pair[1].in_dim, pair[0].out_dim
                ),
            ));
        }
    }
    Ok(())
}

/// Weight matrix (`out × in`) and bias of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// All weights and biases of a network.
///
/// The flat view orders layers first to last and, within a layer, the weight
/// matrix row-major followed by the bias.
type ParamSlot = (usize, Option<(usize, usize)>, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    layers: Vec<Dense>,
}

impl Params {
    pub fn zeros(specs: &[LayerSpec]) -> Self {
        Self {
            layers: specs
                .iter()
                .map(|s| Dense {
                    weights: Array2::zeros((s.out_dim, s.in_dim)),
                    bias: Array1::zeros(s.out_dim),
                })
                .collect(),
        }
    }

    /// Weights uniform in `±√(6/(in+out))`, biases zero.
    pub fn glorot(specs: &[LayerSpec], rng: &mut RngStream) -> Self {
        let mut p = Self::zeros(specs);
        for (layer, s) in p.layers.iter_mut().zip(specs) {
            let limit = (6.0 / (s.in_dim + s.out_dim) as f64).sqrt();
            layer
                .weights
                .mapv_inplace(|_| limit * (2.0 * rng.uniform() - 1.0));
        }
        p
    }

    pub fn from_flat(specs: &[LayerSpec], values: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(specs);
        if values.len() != p.len() {
            return Err(Error::shape(format!(
                "{} values for {} parameters",
                values.len(),
                p.len()
            )));
        }
        let mut rest = values;
        for slot in p.slices_mut() {
            let (head, tail) = rest.split_at(slot.len());
            slot.copy_from_slice(head);
            rest = tail;
        }
        Ok(p)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for s in self.slices() {
            out.extend_from_slice(s);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    /// `(layer, Some((row, col)))` for a weight, `(layer, None)` plus the
    /// bias offset for a bias.
    fn locate(&self, mut index: usize) -> Option<ParamSlot> {
        for (li, l) in self.layers.iter().enumerate() {
            let (rows, cols) = l.weights.dim();
            if index < rows * cols {
                return Some((li, Some((index / cols, index % cols)), 0));
            }
            index -= rows * cols;
            if index < l.bias.len() {
                return Some((li, None, index));
            }
            index -= l.bias.len();
        }
        None
    }

    /// Value at flat index.
    pub fn get(&self, index: usize) -> Option<f64> {
        self.locate(index).map(|(li, w, b)| match w {
            Some(rc) => self.layers[li].weights[rc],
            None => self.layers[li].bias[b],
        })
    }

    /// Sets the value at flat index.
    pub fn set(&mut self, index: usize, value: f64) -> Result<()> {
        let (li, w, b) = self.locate(index).ok_or_else(|| {
            Error::shape(format!("flat index {index} out of range {}", self.len()))
        })?;
        match w {
            Some(rc) => self.layers[li].weights[rc] = value,
            None => self.layers[li].bias[b] = value,
        }
        Ok(())
    }

    fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| {
            [
                l.weights.as_slice().expect("standard layout"),
                l.bias.as_slice().expect("standard layout"),
            ]
        })
    }

    fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| {
            [
                l.weights.as_slice_mut().expect("standard layout"),
                l.bias.as_slice_mut().expect("standard layout"),
            ]
        })
    }

    fn same_shape(&self, other: &Params) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.dim() == b.weights.dim() && a.bias.len() == b.bias.len())
    }

    fn check_shape(&self, other: &Params) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape("parameter sets have different layer shapes"))
        }
    }

    /// `self += k·other`.
    pub fn add_scaled(&mut self, other: &Params, k: f64) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.slices_mut().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += k * y);
        }
        Ok(())
    }

    pub fn scale(&mut self, k: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= k);
        }
    }

    /// Clamps every weight and bias into `[-c, c]`.
    pub fn clip(&mut self, c: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x = x.clamp(-c, c));
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.slices().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.slices().flatten().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout masks are drawn and the pass is cached for backward.
    Train,
    /// Deterministic; dropout is the identity.
    Eval,
}

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(0);

fn fresh_id() -> u64 {
    NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed)
}

/// A dense network: layer specs plus parameters.
#[derive(Debug)]
pub struct Network {
    specs: Vec<LayerSpec>,
    params: Params,
    id: u64,
    version: u64,
}

impl Clone for Network {
    fn clone(&self) -> Self {
        Self {
            specs: self.specs.clone(),
            params: self.params.clone(),
            id: fresh_id(),
            version: 0,
        }
    }
}

/// Output of a forward pass and everything backward needs.
#[derive(Debug, Clone)]
pub struct Forward {
    pub output: Array2<f64>,
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    network: u64,
    version: u64,
}

/// Gradient with respect to every parameter and to the input batch.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: Params,
    pub input: Array2<f64>,
}

impl Network {
    pub fn new(specs: Vec<LayerSpec>, params: Params) -> Result<Self> {
        validate_specs(&specs)?;
        if !Params::zeros(&specs).same_shape(&params) {
            return Err(Error::shape("parameters do not match layer specs"));
        }
        Ok(Self {
            specs,
            params,
            id: fresh_id(),
            version: 0,
        })
    }

    /// Glorot-initialized network.
    pub fn init(specs: Vec<LayerSpec>, rng: &mut RngStream) -> Result<Self> {
        validate_specs(&specs)?;
        let params = Params::glorot(&specs, rng);
        Self::new(specs, params)
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Mutable parameters; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut Params {
        self.version += 1;
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.specs[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.specs[self.specs.len() - 1].out_dim
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "input width {} but network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Batched forward pass. `rng` is only drawn from in train mode for
    /// layers with dropout.
    pub fn forward(&self, x: ArrayView2<f64>, mode: Mode, rng: &mut RngStream) -> Result<Forward> {
        self.check_input(&x)?;
        let n = self.specs.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n);
        let mut a = x.to_owned();
        for (spec, layer) in self.specs.iter().zip(&self.params.layers) {
            let z = affine(a.view(), layer);
            let mut out = z.mapv(|v| spec.activation.apply(v));
            let mask = if mode == Mode::Train && spec.dropout > 0.0 {
                let keep = 1.0 - spec.dropout;
                let m = out.mapv(|_| {
                    if rng.uniform() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                out *= &m;
                Some(m)
            } else {
                None
            };
            inputs.push(a);
            pre.push(z);
            masks.push(mask);
            a = out;
        }
        Ok(Forward {
            output: a,
            inputs,
            pre,
            masks,
            network: self.id,
            version: self.version,
        })
    }

    /// Eval-mode output without keeping a cache.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        for (spec, layer) in self.specs.iter().zip(&self.params.layers) {
            a = affine(a.view(), layer);
            a.mapv_inplace(|v| spec.activation.apply(v));
        }
        Ok(a)
    }

    /// Eval-mode output for a single input vector.
    pub fn predict_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view =
            ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::shape(e.to_string()))?;
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    /// Reverse-mode gradient of `Σ grad_out ⊙ output` for the cached pass.
    pub fn backward(&self, fwd: &Forward, grad_out: ArrayView2<f64>) -> Result<Gradients> {
        let (params, input) = self.backward_impl(fwd, grad_out, true)?;
        Ok(Gradients {
            params: params.expect("parameter gradients requested"),
            input,
        })
    }

    /// Gradient with respect to the input batch only.
    pub fn backward_input(&self, fwd: &Forward, grad_out: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.backward_impl(fwd, grad_out, false)?.1)
    }

    fn backward_impl(
        &self,
        fwd: &Forward,
        grad_out: ArrayView2<f64>,
        want_params: bool,
    ) -> Result<(Option<Params>, Array2<f64>)> {
        if fwd.network != self.id || fwd.version != self.version {
            return Err(Error::State(
                "forward cache does not belong to the current parameters".into(),
            ));
        }
        if grad_out.dim() != fwd.output.dim() {
            return Err(Error::shape(format!(
                "output gradient {:?} but output {:?}",
                grad_out.dim(),
                fwd.output.dim()
            )));
        }
        let mut grads = want_params.then(|| Params::zeros(&self.specs));
        let mut g = grad_out.to_owned();
        for l in (0..self.specs.len()).rev() {
            if let Some(m) = &fwd.masks[l] {
                g *= m;
            }
            let act = self.specs[l].activation;
            Zip::from(&mut g)
                .and(&fwd.pre[l])
                .for_each(|gi, &z| *gi *= act.derivative(z));
            if let Some(grads) = grads.as_mut() {
                let slot = &mut grads.layers[l];
                slot.weights = g.t().dot(&fwd.inputs[l]).as_standard_layout().into_owned();
                slot.bias = g.sum_axis(Axis(0));
            }
            g = g.dot(&self.params.layers[l].weights);
        }
        Ok((grads, g))
    }
}

fn affine(x: ArrayView2<f64>, layer: &Dense) -> Array2<f64> {
    let mut z = x.dot(&layer.weights.t());
    if !z.is_standard_layout() {
        z = z.as_standard_layout().into_owned();
    }
    z += &layer.bias;
    z
}

/// A loss value with its gradient with respect to the predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Loss {
    pub value: f64,
    pub grad: Vec<f64>,
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} targets",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::shape("loss of an empty batch"));
    }
    Ok(())
}

/// Mean binary cross-entropy with predictions clamped to
/// `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub fn bce_loss(pred: &[f64], label: &[f64]) -> Result<Loss> {
    check_pair(pred, label)?;
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(label)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            value -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
            (-y / p + (1.0 - y) / (1.0 - p)) / n
        })
        .collect();
    Ok(Loss {
        value: value / n,
        grad,
    })
}

/// Mean squared error.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<Loss> {
    check_pair(pred, target)?;
    let n = pred.len() as f64;
    let value = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect();
    Ok(Loss { value, grad })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::config("beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta2", "must lie in [0, 1)"));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::config("epsilon", "must be non-negative"));
        }
        Ok(())
    }
}

/// Bias-corrected Adam moments for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Params,
    v: Params,
    step: u64,
}

impl AdamState {
    pub fn new(like: &Params, config: AdamConfig) -> Self {
        let mut m = like.clone();
        m.scale(0.0);
        Self {
            config,
            v: m.clone(),
            m,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &Params {
        &self.m
    }

    pub fn second_moment(&self) -> &Params {
        &self.v
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) -> Result<()> {
        params.check_shape(grads)?;
        params.check_shape(&self.m)?;
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let moments = self.m.slices_mut().zip(self.v.slices_mut());
        for ((p, g), (m, v)) in params.slices_mut().zip(grads.slices()).zip(moments) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + epsilon);
            }
        }
        Ok(())
    }

    /// Applies one update to a network's parameters.
    pub fn update(&mut self, net: &mut Network, grads: &Params) -> Result<()> {
        self.step(net.params_mut(), grads)
    }
}
