//! The multi-warden adversarial game: a power-constrained generator, one
//! discriminator per warden, Bob's decoder, their losses, the alternating
//! training loop and the adaptive-warden retraining schedule.
//!
//! Discriminators output the probability that an observation is pure noise,
//! so a fooled warden outputs values near 1 on transmitted slots. The
//! generator minimizes `Σ_i λ_i·E[log(1 − D_i(y_i))] + μ·E‖m − m̂‖²`.
//!
//! Signals and observations travel as rows of `2N` reals in split layout
//! (`[re.., im..]`).

use std::collections::VecDeque;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, SlotChannel};
use crate::error::{Error, Result};
use crate::evaluation::{
    adjoint_split, apply_split, awgn_split, measure_ber, measure_detection, ChannelBank,
    DetectionConfig, Receiver, Scenario, Transmitter, WardenModel,
};
use crate::neuralnet::{
    mlp, mse_loss, Activation, AdamConfig, AdamState, LayerSpec, Mode, Network, Params, PROB_CLAMP,
};
use crate::numerics::{ComplexVec, RngStream};

/// Iterations per logged epoch.
pub const ITERATIONS_PER_EPOCH: usize = 10;

/// Relative slack below which an over-budget signal is left unscaled, so that
/// re-projecting a projected signal is the identity.
const POWER_SLACK: f64 = 1e-12;

/// Scales `s` (split layout) onto the energy ball of radius `power` if it
/// lies outside. Returns the factor applied.
pub fn project_power(s: &mut [f64], power: f64) -> f64 {
    let energy: f64 = s.iter().map(|v| v * v).sum();
    if energy > power * (1.0 + POWER_SLACK) {
        let c = (power / energy).sqrt();
        s.iter_mut().for_each(|v| *v *= c);
        c
    } else {
        1.0
    }
}

/// Maps bits to ±1.
pub fn bits_to_symbols(bits: &[bool]) -> Vec<f64> {
    bits.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect()
}

/// `rows × bits` matrix of uniformly random ±1 symbols.
pub fn random_messages(rows: usize, bits: usize, rng: &mut RngStream) -> Array2<f64> {
    Array2::from_shape_fn((rows, bits), |_| if rng.bit() { 1.0 } else { -1.0 })
}

/// Network widths shared by the generator, the discriminators and the
/// decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    /// Message length `N_b`.
    pub message_bits: usize,
    /// Generator noise dimension `d`.
    pub noise_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    /// Dropout after each generator hidden layer.
    pub dropout: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self::desk()
    }
}

impl Architecture {
    /// Small networks that train in seconds on one core.
    pub fn desk() -> Self {
        Self {
            message_bits: 8,
            noise_dim: 16,
            generator_hidden: vec![64, 64, 64],
            discriminator_hidden: vec![64, 64, 64],
            decoder_hidden: vec![64, 64, 64],
            dropout: 0.2,
        }
    }

    /// Full-width networks.
    pub fn reproduction() -> Self {
        Self {
            message_bits: 8,
            noise_dim: 128,
            generator_hidden: vec![512, 1024, 2048],
            discriminator_hidden: vec![512, 512, 512],
            decoder_hidden: vec![512, 512, 512],
            dropout: 0.2,
        }
    }

    /// Same widths with `depth` hidden layers in the generator and decoder.
    pub fn with_depth(&self, depth: usize) -> Self {
        let width = |h: &[usize]| h.first().copied().unwrap_or(64);
        Self {
            generator_hidden: vec![width(&self.generator_hidden); depth],
            decoder_hidden: vec![width(&self.decoder_hidden); depth],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.message_bits == 0 {
            return Err(Error::config("message_bits", "must be positive"));
        }
        if self.noise_dim == 0 {
            return Err(Error::config("noise_dim", "must be positive"));
        }
        for (name, h) in [
            ("generator_hidden", &self.generator_hidden),
            ("discriminator_hidden", &self.discriminator_hidden),
            ("decoder_hidden", &self.decoder_hidden),
        ] {
            if h.contains(&0) {
                return Err(Error::config(name, "layer widths must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub message_bits: usize,
    pub noise_dim: usize,
    /// Complex output length `N`.
    pub slot_len: usize,
    /// Energy budget `P`.
    pub power: f64,
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

impl GeneratorSpec {
    pub fn new(arch: &Architecture, scenario: &Scenario) -> Self {
        Self {
            message_bits: arch.message_bits,
            noise_dim: arch.noise_dim,
            slot_len: scenario.slot_len,
            power: scenario.power,
            hidden: arch.generator_hidden.clone(),
            dropout: arch.dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.message_bits + self.noise_dim
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        mlp(
            self.input_dim(),
            &self.hidden,
            2 * self.slot_len,
            Activation::Relu,
            Activation::Linear,
            self.dropout,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.message_bits == 0 || self.noise_dim == 0 || self.slot_len == 0 {
            return Err(Error::config(
                "generator",
                "message_bits, noise_dim and slot_len must be positive",
            ));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::config("power", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Alice's transmitter network.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: GeneratorSpec,
    net: Network,
}

/// A generator forward pass with the projection it applied.
#[derive(Debug, Clone)]
pub struct GeneratorPass {
    fwd: crate::neuralnet::Forward,
    scales: Vec<f64>,
    /// Projected signals, one per row.
    pub signals: Array2<f64>,
}

fn same_layout(a: &[LayerSpec], b: &[LayerSpec]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.in_dim == y.in_dim && x.out_dim == y.out_dim && x.activation == y.activation
        })
}

impl Generator {
    pub fn new(spec: GeneratorSpec, rng: &mut RngStream) -> Result<Self> {
        spec.validate()?;
        let net = Network::init(spec.layers(), rng)?;
        Ok(Self { spec, net })
    }

    pub fn from_network(spec: GeneratorSpec, net: Network) -> Result<Self> {
        spec.validate()?;
        if !same_layout(net.specs(), &spec.layers()) {
            return Err(Error::shape(
                "network layers do not match the generator spec",
            ));
        }
        Ok(Self { spec, net })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// Rows of `[m | z]`.
    pub fn input_batch(
        &self,
        messages: ArrayView2<f64>,
        noise: ArrayView2<f64>,
    ) -> Result<Array2<f64>> {
        if messages.ncols() != self.spec.message_bits || noise.ncols() != self.spec.noise_dim {
            return Err(Error::shape(format!(
                "generator expects {} message and {} noise columns, got {} and {}",
                self.spec.message_bits,
                self.spec.noise_dim,
                messages.ncols(),
                noise.ncols()
            )));
        }
        if messages.nrows() != noise.nrows() {
            return Err(Error::shape("message and noise batches differ in length"));
        }
        concatenate(Axis(1), &[messages, noise]).map_err(|e| Error::shape(e.to_string()))
    }

    /// `s = G(m, z)` in eval mode, projected onto the power budget.
    pub fn generate_signal(&self, m: &[bool], z: &[f64]) -> Result<ComplexVec> {
        let msg = Array2::from_shape_vec((1, m.len()), bits_to_symbols(m))
            .map_err(|e| Error::shape(e.to_string()))?;
        let noise =
            ArrayView2::from_shape((1, z.len()), z).map_err(|e| Error::shape(e.to_string()))?;
        let input = self.input_batch(msg.view(), noise)?;
        let mut out = self.net.predict(input.view())?.into_raw_vec_and_offset().0;
        project_power(&mut out, self.spec.power);
        ComplexVec::from_split(&out)
    }

    pub fn forward(
        &self,
        input: ArrayView2<f64>,
        mode: Mode,
        rng: &mut RngStream,
    ) -> Result<GeneratorPass> {
        let fwd = self.net.forward(input, mode, rng)?;
        let mut signals = fwd.output.clone();
        let scales = signals
            .rows_mut()
            .into_iter()
            .map(|mut row| project_power(row.as_slice_mut().expect("row-major"), self.spec.power))
            .collect();
        Ok(GeneratorPass {
            fwd,
            scales,
            signals,
        })
    }

    /// Parameter gradient given the gradient with respect to the projected
    /// signals.
    pub fn backward(&self, pass: &GeneratorPass, grad_signals: ArrayView2<f64>) -> Result<Params> {
        if grad_signals.dim() != pass.signals.dim() {
            return Err(Error::shape("signal gradient shape differs from the batch"));
        }
        let mut g_raw = grad_signals.to_owned();
        for ((mut g, raw), &c) in g_raw
            .rows_mut()
            .into_iter()
            .zip(pass.fwd.output.rows())
            .zip(&pass.scales)
        {
            if c != 1.0 {
                let energy = raw.dot(&raw);
                let radial = raw.dot(&g) / energy;
                g.zip_mut_with(&raw, |gi, &ri| *gi = c * (*gi - ri * radial));
            }
        }
        Ok(self.net.backward(&pass.fwd, g_raw.view())?.params)
    }
}

impl Transmitter for Generator {
    fn slot_len(&self) -> usize {
        self.spec.slot_len
    }

    fn message_bits(&self) -> usize {
        self.spec.message_bits
    }

    fn transmit_batch(
        &self,
        messages: ArrayView2<f64>,
        rng: &mut RngStream,
    ) -> Result<Array2<f64>> {
        let z = Array2::from_shape_fn((messages.nrows(), self.spec.noise_dim), |_| {
            rng.standard_normal()
        });
        let input = self.input_batch(messages, z.view())?;
        Ok(self.forward(input.view(), Mode::Eval, rng)?.signals)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LossMode {
    /// Sigmoid discriminators with the cross-entropy game.
    Standard,
    /// Linear critics with weights clipped to `[-clip, clip]`.
    Wasserstein { clip: f64 },
}

/// How the generator's covertness term is formed from `D_i(y_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovertnessForm {
    /// Minimize `log(1 − D)`, pushing observations toward "noise".
    #[default]
    LogComplement,
    /// Minimize `+log D` as literally written in the composite loss; this
    /// pushes observations toward "signal" and exists for comparison only.
    LogDirect,
    /// Minimize `−log D`: same fixed point as `LogComplement` with
    /// non-vanishing gradients when the warden is confident.
    NegLog,
}

/// Discriminator layout: `2N → hidden (leaky ReLU) → 1`.
pub fn discriminator_layers(slot_len: usize, hidden: &[usize], mode: LossMode) -> Vec<LayerSpec> {
    let out = match mode {
        LossMode::Standard => Activation::Sigmoid,
        LossMode::Wasserstein { .. } => Activation::Linear,
    };
    mlp(2 * slot_len, hidden, 1, Activation::LeakyRelu, out, 0.0)
}

/// One warden model: its network, the link it observes and its weight `λ_i`.
#[derive(Debug, Clone)]
pub struct Warden {
    pub net: Network,
    pub channel: ChannelConfig,
    pub weight: f64,
}

/// The `K` discriminators the generator plays against.
#[derive(Debug, Clone)]
pub struct AdversarySet {
    wardens: Vec<Warden>,
    mode: LossMode,
}

impl AdversarySet {
    /// One freshly initialized discriminator per scenario warden, `λ_i = 1/K`.
    pub fn new(
        scenario: &Scenario,
        hidden: &[usize],
        mode: LossMode,
        rng: &mut RngStream,
    ) -> Result<Self> {
        scenario.validate()?;
        let k = scenario.k() as f64;
        let wardens = scenario
            .wardens
            .iter()
            .map(|cfg| {
                Ok(Warden {
                    net: Network::init(discriminator_layers(scenario.slot_len, hidden, mode), rng)?,
                    channel: cfg.clone(),
                    weight: 1.0 / k,
                })
            })
            .collect::<Result<_>>()?;
        Self::from_parts(wardens, mode)
    }

    pub fn from_parts(wardens: Vec<Warden>, mode: LossMode) -> Result<Self> {
        if wardens.is_empty() {
            return Err(Error::config("K", "at least one discriminator is required"));
        }
        if let LossMode::Wasserstein { clip } = mode {
            if !(clip > 0.0 && clip.is_finite()) {
                return Err(Error::config("clip", "must be positive and finite"));
            }
        }
        for (i, w) in wardens.iter().enumerate() {
            if !(w.weight >= 0.0 && w.weight.is_finite()) {
                return Err(Error::config(
                    format!("lambdas[{i}]"),
                    "must be finite and non-negative",
                ));
            }
            if w.net.output_dim() != 1 {
                return Err(Error::shape(format!(
                    "discriminator {i} must have one output"
                )));
            }
            check_output_activation(&w.net, mode)?;
        }
        Ok(Self { wardens, mode })
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.wardens.len() {
            return Err(Error::config(
                "lambdas",
                format!("expected {} weights", self.wardens.len()),
            ));
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::config(
                format!("lambdas[{i}]"),
                "must be finite and non-negative",
            ));
        }
        for (w, &v) in self.wardens.iter_mut().zip(weights) {
            w.weight = v;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.wardens.len()
    }

    pub fn mode(&self) -> LossMode {
        self.mode
    }

    pub fn wardens(&self) -> &[Warden] {
        &self.wardens
    }

    pub fn wardens_mut(&mut self) -> &mut [Warden] {
        &mut self.wardens
    }

    pub fn weights(&self) -> Vec<f64> {
        self.wardens.iter().map(|w| w.weight).collect()
    }
}

fn check_output_activation(net: &Network, mode: LossMode) -> Result<()> {
    let last = net.specs()[net.specs().len() - 1].activation;
    match (mode, last) {
        (LossMode::Standard, Activation::Sigmoid) => Ok(()),
        (LossMode::Wasserstein { .. }, Activation::Linear) => Ok(()),
        (LossMode::Standard, _) => Err(Error::config(
            "loss_mode",
            "standard mode needs sigmoid discriminators",
        )),
        (LossMode::Wasserstein { .. }, _) => Err(Error::config(
            "loss_mode",
            "wasserstein mode needs linear-output critics",
        )),
    }
}

/// Bob's receiver: a matched filter with perfect channel knowledge followed by
/// a dense network with one tanh output per message bit.
#[derive(Debug, Clone)]
pub struct Decoder {
    net: Network,
    slot_len: usize,
    message_bits: usize,
}

impl Decoder {
    pub fn layers(slot_len: usize, message_bits: usize, hidden: &[usize]) -> Vec<LayerSpec> {
        mlp(
            2 * slot_len,
            hidden,
            message_bits,
            Activation::LeakyRelu,
            Activation::Tanh,
            0.0,
        )
    }

    pub fn new(
        slot_len: usize,
        message_bits: usize,
        hidden: &[usize],
        rng: &mut RngStream,
    ) -> Result<Self> {
        let net = Network::init(Self::layers(slot_len, message_bits, hidden), rng)?;
        Ok(Self {
            net,
            slot_len,
            message_bits,
        })
    }

    pub fn from_network(slot_len: usize, message_bits: usize, net: Network) -> Result<Self> {
        if net.input_dim() != 2 * slot_len || net.output_dim() != message_bits {
            return Err(Error::shape(format!(
                "decoder maps {} → {}, expected {} → {message_bits}",
                net.input_dim(),
                net.output_dim(),
                2 * slot_len
            )));
        }
        Ok(Self {
            net,
            slot_len,
            message_bits,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// Matched-filter outputs `hᴴ·y`, one row per observation.
    pub fn front_end(channels: &[SlotChannel], y: ArrayView2<f64>) -> Result<Array2<f64>> {
        adjoint_rows(channels, y)
    }

    /// Per-bit soft outputs in `[-1, 1]`.
    pub fn soft_decode(&self, y: &ComplexVec, channel: &SlotChannel) -> Result<Vec<f64>> {
        if y.len() != self.slot_len {
            return Err(Error::shape(format!(
                "observation length {} but slot {}",
                y.len(),
                self.slot_len
            )));
        }
        let r = adjoint_split(channel, &y.to_split())?;
        self.net.predict_one(&r)
    }

    pub fn decode(&self, y: &ComplexVec, channel: &SlotChannel) -> Result<Vec<bool>> {
        Ok(self
            .soft_decode(y, channel)?
            .into_iter()
            .map(|v| v > 0.0)
            .collect())
    }
}

impl Receiver for Decoder {
    fn decode_batch(&self, y: ArrayView2<f64>, channels: &[SlotChannel]) -> Result<Array2<f64>> {
        let r = Self::front_end(channels, y)?;
        let out = self.net.predict(r.view())?;
        debug_assert_eq!(out.ncols(), self.message_bits);
        Ok(out)
    }
}

/// `y_m = H_m s_m (+ n_m)` for every row.
pub fn propagate_rows(
    channels: &[SlotChannel],
    signals: ArrayView2<f64>,
    noise: Option<ArrayView2<f64>>,
) -> Result<Array2<f64>> {
    if channels.len() != signals.nrows() {
        return Err(Error::shape(format!(
            "{} channels for {} signals",
            channels.len(),
            signals.nrows()
        )));
    }
    let mut out = Array2::zeros(signals.dim());
    for ((ch, s), mut o) in channels.iter().zip(signals.rows()).zip(out.rows_mut()) {
        let y = apply_split(ch, &s.to_vec())?;
        o.assign(&ndarray::ArrayView1::from(&y[..]));
    }
    if let Some(n) = noise {
        if n.dim() != out.dim() {
            return Err(Error::shape("noise batch shape differs from signals"));
        }
        out += &n;
    }
    Ok(out)
}

/// Row-wise adjoint of [`propagate_rows`] without noise.
pub fn adjoint_rows(channels: &[SlotChannel], grads: ArrayView2<f64>) -> Result<Array2<f64>> {
    if channels.len() != grads.nrows() {
        return Err(Error::shape(format!(
            "{} channels for {} rows",
            channels.len(),
            grads.nrows()
        )));
    }
    let mut out = Array2::zeros(grads.dim());
    for ((ch, g), mut o) in channels.iter().zip(grads.rows()).zip(out.rows_mut()) {
        let a = adjoint_split(ch, &g.to_vec())?;
        o.assign(&ndarray::ArrayView1::from(&a[..]));
    }
    Ok(out)
}

/// Channels and noise one warden sees during a training iteration.
#[derive(Debug, Clone)]
pub struct WardenBatch {
    pub channels: Vec<SlotChannel>,
    pub noise_h1: Array2<f64>,
    pub noise_h0: Array2<f64>,
}

/// Every random quantity of one training iteration.
#[derive(Debug, Clone)]
pub struct Batch {
    /// ±1 message symbols.
    pub messages: Array2<f64>,
    /// Generator noise `z`.
    pub noise: Array2<f64>,
    pub bob: Vec<SlotChannel>,
    pub bob_noise: Array2<f64>,
    pub wardens: Vec<WardenBatch>,
}

impl Batch {
    /// Per-sample channel realizations (independent across samples) and
    /// noise for Bob and every warden.
    pub fn sample(
        spec: &GeneratorSpec,
        bank: &ChannelBank,
        size: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::config("batch", "must be at least 1"));
        }
        let sc = bank.scenario();
        if sc.slot_len != spec.slot_len {
            return Err(Error::shape(
                "scenario slot length differs from the generator's",
            ));
        }
        let n = sc.slot_len;
        let messages = random_messages(size, spec.message_bits, rng);
        let noise = Array2::from_shape_fn((size, spec.noise_dim), |_| rng.standard_normal());
        let bob: Vec<SlotChannel> = (0..size).map(|_| bank.bob_slot(rng)).collect();
        let bob_noise = noise_rows(size, n, sc.bob.noise_variance, rng);
        let mut per_sample: Vec<Vec<SlotChannel>> =
            (0..size).map(|_| bank.warden_slots(rng)).collect();
        let wardens = sc
            .wardens
            .iter()
            .enumerate()
            .map(|(i, cfg)| WardenBatch {
                channels: per_sample.iter_mut().map(|v| v[i].clone()).collect(),
                noise_h1: noise_rows(size, n, cfg.noise_variance, rng),
                noise_h0: noise_rows(size, n, cfg.noise_variance, rng),
            })
            .collect();
        Ok(Self {
            messages,
            noise,
            bob,
            bob_noise,
            wardens,
        })
    }

    pub fn len(&self) -> usize {
        self.messages.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `rows` complex AWGN vectors in split layout.
pub fn noise_rows(rows: usize, n: usize, variance: f64, rng: &mut RngStream) -> Array2<f64> {
    let mut out = Array2::zeros((rows, 2 * n));
    for mut row in out.rows_mut() {
        row.assign(&ndarray::ArrayView1::from(
            &awgn_split(n, variance, rng)[..],
        ));
    }
    out
}

fn column(values: &Array2<f64>) -> Vec<f64> {
    values.column(0).to_vec()
}

fn as_column(values: Vec<f64>) -> Array2<f64> {
    let n = values.len();
    Array2::from_shape_vec((n, 1), values).expect("column shape")
}

/// A discriminator or critic objective and the gradient that descends its
/// negation (the direction the warden's optimizer follows).
#[derive(Debug, Clone)]
pub struct WardenObjective {
    pub value: f64,
    pub descent_grad: Params,
    pub mean_noise_output: f64,
    pub mean_signal_output: f64,
}

fn stacked_forward(
    d: &Network,
    noise: ArrayView2<f64>,
    signal: ArrayView2<f64>,
) -> Result<(crate::neuralnet::Forward, usize)> {
    if noise.nrows() == 0 || signal.nrows() == 0 {
        return Err(Error::shape("discriminator batches must be nonempty"));
    }
    let stacked =
        concatenate(Axis(0), &[noise, signal]).map_err(|e| Error::shape(e.to_string()))?;
    let mut unused = RngStream::new(0, 0);
    Ok((
        d.forward(stacked.view(), Mode::Eval, &mut unused)?,
        noise.nrows(),
    ))
}

/// `mean log D(n) + mean log(1 − D(y))` with probabilities clamped at
/// [`PROB_CLAMP`].
pub fn discriminator_loss(
    d: &Network,
    noise: ArrayView2<f64>,
    signal: ArrayView2<f64>,
) -> Result<WardenObjective> {
    check_output_activation(d, LossMode::Standard)?;
    let (fwd, split) = stacked_forward(d, noise, signal)?;
    let out = column(&fwd.output);
    let (n0, n1) = (split as f64, (out.len() - split) as f64);
    let mut value = 0.0;
    let grad: Vec<f64> = out
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if k < split {
                value += p.ln() / n0;
                -1.0 / (n0 * p)
            } else {
                value += (1.0 - p).ln() / n1;
                1.0 / (n1 * (1.0 - p))
            }
        })
        .collect();
    let descent_grad = d.backward(&fwd, as_column(grad).view())?.params;
    Ok(WardenObjective {
        value,
        descent_grad,
        mean_noise_output: out[..split].iter().sum::<f64>() / n0,
        mean_signal_output: out[split..].iter().sum::<f64>() / n1,
    })
}

/// Critic objective `mean f(n) − mean f(y)`.
pub fn critic_loss(
    critic: &Network,
    noise: ArrayView2<f64>,
    signal: ArrayView2<f64>,
) -> Result<WardenObjective> {
    check_output_activation(critic, LossMode::Wasserstein { clip: 1.0 })?;
    let (fwd, split) = stacked_forward(critic, noise, signal)?;
    let out = column(&fwd.output);
    let (n0, n1) = (split as f64, (out.len() - split) as f64);
    let mean0 = out[..split].iter().sum::<f64>() / n0;
    let mean1 = out[split..].iter().sum::<f64>() / n1;
    let grad = (0..out.len())
        .map(|k| if k < split { -1.0 / n0 } else { 1.0 / n1 })
        .collect();
    let descent_grad = critic.backward(&fwd, as_column(grad).view())?.params;
    Ok(WardenObjective {
        value: mean0 - mean1,
        descent_grad,
        mean_noise_output: mean0,
        mean_signal_output: mean1,
    })
}

/// Dispatches to the objective matching the adversary mode.
pub fn warden_loss(
    mode: LossMode,
    d: &Network,
    noise: ArrayView2<f64>,
    signal: ArrayView2<f64>,
) -> Result<WardenObjective> {
    match mode {
        LossMode::Standard => discriminator_loss(d, noise, signal),
        LossMode::Wasserstein { .. } => critic_loss(d, noise, signal),
    }
}

/// Weights of the two generator objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorLossSettings {
    /// Reliability weight `μ`.
    pub mu: f64,
    pub form: CovertnessForm,
}

impl Default for GeneratorLossSettings {
    fn default() -> Self {
        Self {
            mu: 1.0,
            form: CovertnessForm::LogComplement,
        }
    }
}

/// Generator objective value, its parts and gradients.
#[derive(Debug, Clone)]
pub struct GeneratorObjective {
    pub value: f64,
    /// Weighted covertness term.
    pub covertness: f64,
    /// Unweighted decoder mean squared error.
    pub decode_mse: f64,
    /// Mean warden output on this batch's transmitted slots, per warden.
    pub mean_signal_output: Vec<f64>,
    pub generator_grad: Params,
    pub decoder_grad: Params,
}

/// Generator objective for a batch; covertness from every warden plus
/// `μ·MSE(m, decoder(h_B·s + n_B))`. `mode` controls generator dropout.
pub fn generator_loss(
    gen: &Generator,
    adversaries: &AdversarySet,
    decoder: &Decoder,
    batch: &Batch,
    settings: GeneratorLossSettings,
    mode: Mode,
    rng: &mut RngStream,
) -> Result<GeneratorObjective> {
    let input = gen.input_batch(batch.messages.view(), batch.noise.view())?;
    let pass = gen.forward(input.view(), mode, rng)?;
    generator_objective(gen, &pass, adversaries, decoder, batch, settings)
}

fn generator_objective(
    gen: &Generator,
    pass: &GeneratorPass,
    adversaries: &AdversarySet,
    decoder: &Decoder,
    batch: &Batch,
    settings: GeneratorLossSettings,
) -> Result<GeneratorObjective> {
    if batch.wardens.len() != adversaries.k() {
        return Err(Error::shape(format!(
            "batch has {} warden links for {} discriminators",
            batch.wardens.len(),
            adversaries.k()
        )));
    }
    let m = batch.len() as f64;
    let mut unused = RngStream::new(0, 0);
    let mut g_s = Array2::zeros(pass.signals.dim());
    let mut covertness = 0.0;
    let mut mean_signal_output = Vec::with_capacity(adversaries.k());
    for (w, wb) in adversaries.wardens().iter().zip(&batch.wardens) {
        let y = propagate_rows(&wb.channels, pass.signals.view(), Some(wb.noise_h1.view()))?;
        let fwd = w.net.forward(y.view(), Mode::Eval, &mut unused)?;
        let out = column(&fwd.output);
        mean_signal_output.push(out.iter().sum::<f64>() / m);
        let lam = w.weight;
        let grad: Vec<f64> = out
            .iter()
            .map(|&d| match adversaries.mode() {
                LossMode::Wasserstein { .. } => {
                    covertness -= lam * d / m;
                    -lam / m
                }
                LossMode::Standard => {
                    let p = d.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                    match settings.form {
                        CovertnessForm::LogComplement => {
                            covertness += lam * (1.0 - p).ln() / m;
                            -lam / (m * (1.0 - p))
                        }
                        CovertnessForm::LogDirect => {
                            covertness += lam * p.ln() / m;
                            lam / (m * p)
                        }
                        CovertnessForm::NegLog => {
                            covertness -= lam * p.ln() / m;
                            -lam / (m * p)
                        }
                    }
                }
            })
            .collect();
        let g_y = w.net.backward_input(&fwd, as_column(grad).view())?;
        g_s += &adjoint_rows(&wb.channels, g_y.view())?;
    }

    let received = propagate_rows(
        &batch.bob,
        pass.signals.view(),
        Some(batch.bob_noise.view()),
    )?;
    let r = Decoder::front_end(&batch.bob, received.view())?;
    let fwd = decoder.net.forward(r.view(), Mode::Eval, &mut unused)?;
    let pred = fwd.output.as_slice().expect("row-major").to_vec();
    let target = batch
        .messages
        .as_standard_layout()
        .as_slice()
        .expect("row-major")
        .to_vec();
    let mse = mse_loss(&pred, &target)?;
    let g_out = Array2::from_shape_vec(
        fwd.output.dim(),
        mse.grad.iter().map(|g| settings.mu * g).collect(),
    )
    .map_err(|e| Error::shape(e.to_string()))?;
    let dec = decoder.net.backward(&fwd, g_out.view())?;
    // r = Hᴴ(H s + n), so the signal gradient is Hᴴ H g_r.
    let through = propagate_rows(&batch.bob, dec.input.view(), None)?;
    g_s += &adjoint_rows(&batch.bob, through.view())?;

    let generator_grad = gen.backward(pass, g_s.view())?;
    Ok(GeneratorObjective {
        value: covertness + settings.mu * mse.value,
        covertness,
        decode_mse: mse.value,
        mean_signal_output,
        generator_grad,
        decoder_grad: dec.params,
    })
}

/// Critic objectives per warden and the generator's Wasserstein objective
/// `Σ_i λ_i·mean f_i(y_i)` (to be maximized) for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinLosses {
    pub critic: Vec<f64>,
    pub generator: f64,
}

pub fn wasserstein_losses(
    gen: &Generator,
    adversaries: &AdversarySet,
    batch: &Batch,
) -> Result<WassersteinLosses> {
    let LossMode::Wasserstein { .. } = adversaries.mode() else {
        return Err(Error::config(
            "loss_mode",
            "wasserstein losses need critics",
        ));
    };
    let input = gen.input_batch(batch.messages.view(), batch.noise.view())?;
    let signals = gen
        .forward(input.view(), Mode::Eval, &mut RngStream::new(0, 0))?
        .signals;
    let mut critic = Vec::with_capacity(adversaries.k());
    let mut generator = 0.0;
    for (w, wb) in adversaries.wardens().iter().zip(&batch.wardens) {
        let y = propagate_rows(&wb.channels, signals.view(), Some(wb.noise_h1.view()))?;
        let obj = critic_loss(&w.net, wb.noise_h0.view(), y.view())?;
        generator += w.weight * obj.mean_signal_output;
        critic.push(obj.value);
    }
    Ok(WassersteinLosses { critic, generator })
}

/// Snapshot measurement sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotConfig {
    /// Take a snapshot every this many iterations (0 disables periodic
    /// snapshots; the final iteration is always measured).
    pub every: usize,
    pub detection: DetectionConfig,
    /// Messages decoded for the BER estimate.
    pub ber_messages: usize,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        Self {
            every: 100,
            detection: DetectionConfig {
                calibration: 2000,
                cases: 200,
                ..DetectionConfig::default()
            },
            ber_messages: 500,
        }
    }
}

/// Retraining schedule for wardens that keep learning after deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub period: usize,
    pub window: usize,
    pub total: usize,
    /// Optimizer steps per retraining round.
    pub retrain_steps: usize,
    pub batch: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            period: 1000,
            window: 500,
            total: 5000,
            retrain_steps: 50,
            batch: 64,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("adaptive.period", self.period),
            ("adaptive.window", self.window),
            ("adaptive.total", self.total),
            ("adaptive.batch", self.batch),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Iterations `T`.
    pub iterations: usize,
    /// Batch size `M`.
    pub batch: usize,
    pub adam: AdamConfig,
    /// Reliability weight `μ`.
    pub mu: f64,
    /// Warden weights `λ_i`; `None` means `1/K` each.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    pub loss_mode: LossMode,
    #[serde(default)]
    pub covertness: CovertnessForm,
    pub architecture: Architecture,
    pub snapshots: SnapshotConfig,
    #[serde(default)]
    pub adaptive: Option<AdaptiveConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// 2,000 iterations of batch 64 with the desk architecture and `η = 1e-3`.
    pub fn desk() -> Self {
        Self {
            iterations: 2000,
            batch: 64,
            adam: AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            },
            mu: 1.0,
            lambdas: None,
            loss_mode: LossMode::Standard,
            covertness: CovertnessForm::default(),
            architecture: Architecture::desk(),
            snapshots: SnapshotConfig::default(),
            adaptive: None,
        }
    }

    /// 10,000 iterations with full-width networks.
    pub fn reproduction() -> Self {
        Self {
            iterations: 10_000,
            adam: AdamConfig::default(),
            architecture: Architecture::reproduction(),
            snapshots: SnapshotConfig {
                every: 500,
                ..SnapshotConfig::default()
            },
            ..Self::desk()
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch", "must be at least 1"));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::config("mu", "must be finite and non-negative"));
        }
        self.adam.validate()?;
        self.architecture.validate()?;
        if let Some(l) = &self.lambdas {
            if l.len() != k {
                return Err(Error::config(
                    "lambdas",
                    format!("{} weights for K = {k}", l.len()),
                ));
            }
        }
        if let LossMode::Wasserstein { clip } = self.loss_mode {
            if !(clip > 0.0 && clip.is_finite()) {
                return Err(Error::config("clip", "must be positive and finite"));
            }
        }
        self.snapshots.detection.validate()?;
        if self.snapshots.ber_messages == 0 {
            return Err(Error::config("snapshots.ber_messages", "must be positive"));
        }
        if let Some(a) = &self.adaptive {
            a.validate()?;
        }
        Ok(())
    }
}

/// Detection and reliability measured against the co-trained wardens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub pd: Vec<f64>,
    pub pf: Vec<f64>,
    pub csr: f64,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub epoch: usize,
    pub generator_loss: f64,
    pub covertness_loss: f64,
    pub decode_mse: f64,
    pub discriminator_losses: Vec<f64>,
    /// Mean warden output on transmitted slots, averaged over wardens.
    pub covertness_metric: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<Snapshot>,
}

impl IterationRecord {
    fn all_finite(&self) -> bool {
        let snap = self.snapshot.as_ref().is_none_or(|s| {
            s.pd.iter()
                .chain(&s.pf)
                .chain([&s.csr, &s.ber])
                .all(|v| v.is_finite())
        });
        snap && [
            self.generator_loss,
            self.covertness_loss,
            self.decode_mse,
            self.covertness_metric,
        ]
        .iter()
        .chain(&self.discriminator_losses)
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub seed: u64,
    /// Measured before the first update.
    pub initial: Snapshot,
    pub records: Vec<IterationRecord>,
}

impl TrainLog {
    /// `(iteration, csr)` points starting with the pre-training snapshot.
    pub fn csr_curve(&self) -> Vec<(usize, f64)> {
        std::iter::once((0, self.initial.csr))
            .chain(
                self.records
                    .iter()
                    .filter_map(|r| r.snapshot.as_ref().map(|s| (r.iteration, s.csr))),
            )
            .collect()
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.records
            .iter()
            .rev()
            .find_map(|r| r.snapshot.as_ref())
            .unwrap_or(&self.initial)
    }
}

/// Generator, discriminators and decoder.
#[derive(Debug, Clone)]
pub struct TrainedSystem {
    pub generator: Generator,
    pub adversaries: AdversarySet,
    pub decoder: Decoder,
}

impl TrainedSystem {
    pub fn new(cfg: &TrainConfig, scenario: &Scenario, rng: &mut RngStream) -> Result<Self> {
        cfg.validate(scenario.k())?;
        scenario.validate()?;
        let arch = &cfg.architecture;
        let generator = Generator::new(GeneratorSpec::new(arch, scenario), rng)?;
        let mut adversaries =
            AdversarySet::new(scenario, &arch.discriminator_hidden, cfg.loss_mode, rng)?;
        if let Some(l) = &cfg.lambdas {
            adversaries.set_weights(l)?;
        }
        let decoder = Decoder::new(
            scenario.slot_len,
            arch.message_bits,
            &arch.decoder_hidden,
            rng,
        )?;
        Ok(Self {
            generator,
            adversaries,
            decoder,
        })
    }

    /// The learned wardens as evaluation models.
    pub fn warden_models(&self) -> Vec<WardenModel<'_>> {
        self.adversaries
            .wardens()
            .iter()
            .map(|w| WardenModel::Learned(&w.net))
            .collect()
    }
}

const INIT_STREAM: u64 = 0;
const ITERATION_STREAM: u64 = 1;
const SNAPSHOT_STREAM: u64 = 2;

/// Runs the alternating updates one iteration at a time.
#[derive(Debug)]
pub struct Trainer {
    cfg: TrainConfig,
    bank: ChannelBank,
    system: TrainedSystem,
    gen_adam: AdamState,
    dec_adam: AdamState,
    warden_adam: Vec<AdamState>,
    seed: u64,
    iteration: usize,
    log: TrainLog,
}

impl Trainer {
    pub fn new(cfg: &TrainConfig, scenario: &Scenario, seed: u64) -> Result<Self> {
        let mut init = RngStream::new(seed, INIT_STREAM);
        let system = TrainedSystem::new(cfg, scenario, &mut init)?;
        Self::resume(cfg, scenario, seed, system)
    }

    /// Starts from existing networks (fresh optimizer state).
    pub fn resume(
        cfg: &TrainConfig,
        scenario: &Scenario,
        seed: u64,
        system: TrainedSystem,
    ) -> Result<Self> {
        cfg.validate(scenario.k())?;
        let bank = ChannelBank::new(scenario)?;
        if system.adversaries.k() != scenario.k() {
            return Err(Error::config(
                "K",
                "discriminator count differs from the scenario",
            ));
        }
        let gen_adam = AdamState::new(system.generator.network().params(), cfg.adam);
        let dec_adam = AdamState::new(system.decoder.network().params(), cfg.adam);
        let warden_adam = system
            .adversaries
            .wardens()
            .iter()
            .map(|w| AdamState::new(w.net.params(), cfg.adam))
            .collect();
        let mut trainer = Self {
            cfg: cfg.clone(),
            bank,
            system,
            gen_adam,
            dec_adam,
            warden_adam,
            seed,
            iteration: 0,
            log: TrainLog {
                seed,
                initial: Snapshot {
                    pd: vec![],
                    pf: vec![],
                    csr: 0.0,
                    ber: 0.0,
                },
                records: Vec::new(),
            },
        };
        trainer.log.initial = trainer.snapshot()?;
        Ok(trainer)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn system(&self) -> &TrainedSystem {
        &self.system
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.cfg.iterations
    }

    /// Measures the current system against its own discriminators.
    pub fn snapshot(&self) -> Result<Snapshot> {
        let mut rng = RngStream::new(self.seed, SNAPSHOT_STREAM).fork(self.iteration as u64);
        let det = measure_detection(
            &self.system.generator,
            &self.system.warden_models(),
            &self.bank,
            &self.cfg.snapshots.detection,
            &mut rng,
        )?;
        let ber = measure_ber(
            &self.system.generator,
            &self.system.decoder,
            &self.bank,
            self.cfg.snapshots.ber_messages,
            &mut rng,
        )?;
        Ok(Snapshot {
            pd: det.wardens.iter().map(|w| w.pd).collect(),
            pf: det.wardens.iter().map(|w| w.pf).collect(),
            csr: det.csr,
            ber: ber.ber,
        })
    }

    /// One discriminator step per warden followed by one generator and
    /// decoder step.
    pub fn step(&mut self) -> Result<&IterationRecord> {
        if self.is_done() {
            return Err(Error::State("training already finished".into()));
        }
        self.iteration += 1;
        let t = self.iteration;
        let mut rng = RngStream::new(self.seed, ITERATION_STREAM).fork(t as u64);
        let spec = self.system.generator.spec().clone();
        let batch = Batch::sample(&spec, &self.bank, self.cfg.batch, &mut rng)?;
        let gen = &self.system.generator;
        let input = gen.input_batch(batch.messages.view(), batch.noise.view())?;
        let pass = gen.forward(input.view(), Mode::Train, &mut rng)?;

        let mode = self.system.adversaries.mode();
        let mut discriminator_losses = Vec::with_capacity(batch.wardens.len());
        for ((w, wb), adam) in self
            .system
            .adversaries
            .wardens_mut()
            .iter_mut()
            .zip(&batch.wardens)
            .zip(&mut self.warden_adam)
        {
            let y = propagate_rows(&wb.channels, pass.signals.view(), Some(wb.noise_h1.view()))?;
            let obj = warden_loss(mode, &w.net, wb.noise_h0.view(), y.view())?;
            adam.update(&mut w.net, &obj.descent_grad)?;
            if let LossMode::Wasserstein { clip } = mode {
                w.net.params_mut().clip(clip);
            }
            discriminator_losses.push(obj.value);
        }

        let settings = GeneratorLossSettings {
            mu: self.cfg.mu,
            form: self.cfg.covertness,
        };
        let obj = generator_objective(
            &self.system.generator,
            &pass,
            &self.system.adversaries,
            &self.system.decoder,
            &batch,
            settings,
        )?;
        self.gen_adam
            .update(self.system.generator.network_mut(), &obj.generator_grad)?;
        self.dec_adam
            .update(self.system.decoder.network_mut(), &obj.decoder_grad)?;

        let k = obj.mean_signal_output.len() as f64;
        let mut record = IterationRecord {
            iteration: t,
            epoch: t.div_ceil(ITERATIONS_PER_EPOCH),
            generator_loss: obj.value,
            covertness_loss: obj.covertness,
            decode_mse: obj.decode_mse,
            discriminator_losses,
            covertness_metric: obj.mean_signal_output.iter().sum::<f64>() / k,
            snapshot: None,
        };
        let every = self.cfg.snapshots.every;
        if (every > 0 && t % every == 0) || t == self.cfg.iterations {
            record.snapshot = Some(self.snapshot()?);
        }
        if !record.all_finite() || !self.system.generator.network().params().all_finite() {
            return Err(Error::NonFinite(format!(
                "training diverged at iteration {t}: {record:?}"
            )));
        }
        self.log.records.push(record);
        Ok(self.log.records.last().expect("just pushed"))
    }

    pub fn finish(self) -> (TrainedSystem, TrainLog) {
        (self.system, self.log)
    }

    /// Runs to completion, handing each record to `on_record`.
    pub fn run_with(
        mut self,
        mut on_record: impl FnMut(&IterationRecord),
    ) -> Result<(TrainedSystem, TrainLog)> {
        while !self.is_done() {
            on_record(self.step()?);
        }
        Ok(self.finish())
    }
}

/// Trains a fresh system on `scenario`; fully determined by `seed`.
pub fn train(
    cfg: &TrainConfig,
    scenario: &Scenario,
    seed: u64,
) -> Result<(TrainedSystem, TrainLog)> {
    Trainer::new(cfg, scenario, seed)?.run_with(|_| {})
}

/// Per-iteration covertness metric of wardens that keep retraining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveTrace {
    /// Mean warden output on the slot observed at each iteration.
    pub metric: Vec<f64>,
    /// Iterations after which the wardens were retrained.
    pub retrained_at: Vec<usize>,
}

impl AdaptiveTrace {
    /// Mean of `metric[range]`.
    pub fn mean(&self, range: std::ops::Range<usize>) -> f64 {
        let s = &self.metric[range];
        s.iter().sum::<f64>() / s.len() as f64
    }
}

/// Wardens observe one transmitted slot each per iteration and, every
/// `period` iterations, retrain on their most recent `window` observations
/// against an equally sized pool of noise slots. The transmitter stays frozen.
pub fn adaptive_warden_loop(
    tx: &dyn Transmitter,
    adversaries: &mut AdversarySet,
    bank: &ChannelBank,
    cfg: &AdaptiveConfig,
    adam: AdamConfig,
    rng: &RngStream,
) -> Result<AdaptiveTrace> {
    cfg.validate()?;
    let sc = bank.scenario();
    if adversaries.k() != sc.k() {
        return Err(Error::config(
            "K",
            "discriminator count differs from the scenario",
        ));
    }
    let mode = adversaries.mode();
    let mut optimizers: Vec<AdamState> = adversaries
        .wardens()
        .iter()
        .map(|w| AdamState::new(w.net.params(), adam))
        .collect();
    let mut buffers: Vec<VecDeque<Vec<f64>>> = vec![VecDeque::with_capacity(cfg.window); sc.k()];
    let mut metric = Vec::with_capacity(cfg.total);
    let mut retrained_at = Vec::new();
    for t in 1..=cfg.total {
        let mut r = rng.fork(t as u64);
        let msg = random_messages(1, tx.message_bits(), &mut r);
        let s = tx.transmit_batch(msg.view(), &mut r)?;
        let slots = bank.warden_slots(&mut r);
        let mut total = 0.0;
        for (((w, ch), cfg_i), buf) in adversaries
            .wardens()
            .iter()
            .zip(&slots)
            .zip(&sc.wardens)
            .zip(&mut buffers)
        {
            let noise = noise_rows(1, sc.slot_len, cfg_i.noise_variance, &mut r);
            let y = propagate_rows(std::slice::from_ref(ch), s.view(), Some(noise.view()))?;
            total += w.net.predict(y.view())?[(0, 0)];
            if buf.len() == cfg.window {
                buf.pop_front();
            }
            buf.push_back(y.row(0).to_vec());
        }
        metric.push(total / sc.k() as f64);
        if t % cfg.period == 0 {
            retrained_at.push(t);
            let mut rr = r.fork(u64::MAX);
            for ((w, buf), opt) in adversaries
                .wardens
                .iter_mut()
                .zip(&buffers)
                .zip(&mut optimizers)
            {
                let pool = noise_rows(buf.len(), sc.slot_len, w.channel.noise_variance, &mut rr);
                let m = cfg.batch.min(buf.len());
                for _ in 0..cfg.retrain_steps {
                    let mut signal = Array2::zeros((m, 2 * sc.slot_len));
                    let mut noise = Array2::zeros((m, 2 * sc.slot_len));
                    for (mut s_row, mut n_row) in
                        signal.rows_mut().into_iter().zip(noise.rows_mut())
                    {
                        let pick = ((rr.uniform() * buf.len() as f64) as usize).min(buf.len() - 1);
                        s_row.assign(&ndarray::ArrayView1::from(&buf[pick][..]));
                        let pick = ((rr.uniform() * buf.len() as f64) as usize).min(buf.len() - 1);
                        n_row.assign(&pool.row(pick));
                    }
                    let obj = warden_loss(mode, &w.net, noise.view(), signal.view())?;
                    opt.update(&mut w.net, &obj.descent_grad)?;
                    if let LossMode::Wasserstein { clip } = mode {
                        w.net.params_mut().clip(clip);
                    }
                }
            }
        }
    }
    Ok(AdaptiveTrace {
        metric,
        retrained_at,
    })
}
