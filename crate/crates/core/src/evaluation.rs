//! Scenario presets, Monte Carlo measurement of detection, reliability and
//! covertness success, the two baselines and the experiment sweeps.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::adversarial::{
    adjoint_rows, discriminator_layers, discriminator_loss, noise_rows, propagate_rows,
    random_messages, train, AdaptiveConfig, AdaptiveTrace, LossMode, TrainConfig, TrainLog,
    TrainedSystem,
};
use crate::channel::{ChannelConfig, SlotChannel, TapSampler, TapSet};
use crate::detection::binomial_stderr;
use crate::error::{Error, Result};
use crate::neuralnet::{AdamConfig, AdamState, Network};
use crate::numerics::{q_inverse, ComplexVec, RngStream};

/// Converts a power in dBm to milliwatts.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Urban,
    Military,
    #[serde(rename = "6g-dense")]
    SixGDense,
    Custom,
}

impl Preset {
    pub const NAMED: [Preset; 3] = [Preset::Urban, Preset::Military, Preset::SixGDense];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Urban => "urban",
            Preset::Military => "military",
            Preset::SixGDense => "6g-dense",
            Preset::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "urban" => Ok(Preset::Urban),
            "military" => Ok(Preset::Military),
            "6g-dense" | "6g" => Ok(Preset::SixGDense),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::config(
                "scenario",
                format!("unknown preset {other:?}; expected urban, military, 6g-dense or custom"),
            )),
        }
    }
}

/// Everything about the radio environment: slot length, power budget, Bob's
/// link and one link per warden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub preset: Preset,
    /// Complex samples per slot `N`.
    pub slot_len: usize,
    /// Transmit energy budget `P` per slot (linear, mW).
    pub power: f64,
    pub bob: ChannelConfig,
    pub wardens: Vec<ChannelConfig>,
    /// Mixing coefficient with a shared latent tap vector; 0 draws warden
    /// taps independently.
    #[serde(default)]
    pub warden_correlation: f64,
    /// Slot start times are drawn uniformly from `[0, time_window]` seconds.
    pub time_window: f64,
}

impl Scenario {
    pub const DEFAULT_SLOT_LEN: usize = 32;
    pub const DEFAULT_POWER_DBM: f64 = 10.0;
    /// Bob's default noise variance sits this many dB under `P`.
    pub const DEFAULT_BOB_SNR_DB: f64 = 20.0;

    fn link(noise_variance: f64) -> ChannelConfig {
        ChannelConfig {
            noise_variance,
            ..ChannelConfig::default()
        }
    }

    fn with_wardens(preset: Preset, sigma2: &[f64], correlation: f64) -> Self {
        let power = dbm_to_linear(Self::DEFAULT_POWER_DBM);
        Self {
            preset,
            slot_len: Self::DEFAULT_SLOT_LEN,
            power,
            bob: Self::link(power / db_to_linear(Self::DEFAULT_BOB_SNR_DB)),
            wardens: sigma2.iter().map(|&s| Self::link(s)).collect(),
            warden_correlation: correlation,
            time_window: 0.1,
        }
    }

    /// Three wardens with noise variances 0.5, 1 and 2.
    pub fn urban() -> Self {
        Self::with_wardens(Preset::Urban, &[0.5, 1.0, 2.0], 0.0)
    }

    /// Four wardens, one of them with a much lower noise floor (0.05).
    pub fn military() -> Self {
        Self::with_wardens(Preset::Military, &[1.0, 1.0, 1.0, 0.05], 0.0)
    }

    /// Five closely spaced wardens whose taps share a latent component.
    pub fn six_g_dense() -> Self {
        Self::with_wardens(Preset::SixGDense, &[1.0; 5], 0.7)
    }

    /// `k` identical unit-variance wardens.
    pub fn homogeneous(k: usize) -> Self {
        Self::with_wardens(Preset::Custom, &vec![1.0; k], 0.0)
    }

    pub fn preset(preset: Preset) -> Result<Self> {
        match preset {
            Preset::Urban => Ok(Self::urban()),
            Preset::Military => Ok(Self::military()),
            Preset::SixGDense => Ok(Self::six_g_dense()),
            Preset::Custom => Err(Error::config(
                "scenario",
                "custom scenarios need inline parameters",
            )),
        }
    }

    pub fn k(&self) -> usize {
        self.wardens.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.wardens.is_empty() {
            return Err(Error::config("K", "at least one warden is required"));
        }
        if self.slot_len == 0 {
            return Err(Error::config("slot_len", "must be positive"));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::config("power", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.warden_correlation) {
            return Err(Error::config("warden_correlation", "must lie in [0, 1]"));
        }
        if !(self.time_window >= 0.0 && self.time_window.is_finite()) {
            return Err(Error::config(
                "time_window",
                "must be finite and non-negative",
            ));
        }
        self.bob.validate().map_err(|e| prefix_field(e, "bob"))?;
        for (i, w) in self.wardens.iter().enumerate() {
            w.validate()
                .map_err(|e| prefix_field(e, &format!("wardens[{i}]")))?;
            if w.taps > self.slot_len {
                return Err(Error::config(
                    format!("wardens[{i}].taps"),
                    "exceeds slot_len",
                ));
            }
        }
        if self.bob.taps > self.slot_len {
            return Err(Error::config("bob.taps", "exceeds slot_len"));
        }
        if self.warden_correlation > 0.0 {
            let first = &self.wardens[0];
            if self
                .wardens
                .iter()
                .any(|w| w.taps != first.taps || w.rho != first.rho)
            {
                return Err(Error::config(
                    "warden_correlation",
                    "correlated wardens need equal tap counts and rho",
                ));
            }
        }
        Ok(())
    }

    /// One warden whose link parameters are the mean of this scenario's.
    pub fn averaged_warden(&self) -> Self {
        let k = self.k() as f64;
        let mean = |f: fn(&ChannelConfig) -> f64| self.wardens.iter().map(f).sum::<f64>() / k;
        let taps = (self.wardens.iter().map(|w| w.taps).sum::<usize>() as f64 / k).round() as usize;
        let avg = ChannelConfig {
            taps: taps.max(1),
            rho: mean(|w| w.rho),
            doppler_hz: mean(|w| w.doppler_hz),
            symbol_period: mean(|w| w.symbol_period),
            noise_variance: mean(|w| w.noise_variance),
            per_sample_doppler: self.wardens.iter().any(|w| w.per_sample_doppler),
        };
        Self {
            preset: Preset::Custom,
            wardens: vec![avg],
            warden_correlation: 0.0,
            ..self.clone()
        }
    }

    /// Copy with Bob's noise set for `snr_db = 10·log10(P/σ_B²)`.
    pub fn with_bob_snr_db(&self, snr_db: f64) -> Self {
        let mut s = self.clone();
        s.bob.noise_variance = self.power / db_to_linear(snr_db);
        s
    }

    pub fn bob_snr_db(&self) -> f64 {
        10.0 * (self.power / self.bob.noise_variance).log10()
    }
}

fn prefix_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { field, reason } => Error::Config {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

/// Precomputed tap samplers for every link of a scenario.
#[derive(Debug, Clone)]
pub struct ChannelBank {
    scenario: Scenario,
    bob: TapSampler,
    wardens: Vec<TapSampler>,
}

impl ChannelBank {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            scenario: scenario.clone(),
            bob: TapSampler::new(&scenario.bob)?,
            wardens: scenario
                .wardens
                .iter()
                .map(TapSampler::new)
                .collect::<Result<_>>()?,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn slot_time(&self, rng: &mut RngStream) -> f64 {
        self.scenario.time_window * rng.uniform()
    }

    /// Bob's channel for one slot.
    pub fn bob_slot(&self, rng: &mut RngStream) -> SlotChannel {
        let taps = self.bob.sample(rng);
        let t = self.slot_time(rng);
        SlotChannel::new(&taps, t, &self.scenario.bob, self.scenario.slot_len)
    }

    /// Raw tap draws for every warden, mixed with a shared latent vector
    /// when the scenario correlates wardens.
    pub fn warden_taps(&self, rng: &mut RngStream) -> Vec<TapSet> {
        let c = self.scenario.warden_correlation;
        let own: Vec<TapSet> = self.wardens.iter().map(|s| s.sample(rng)).collect();
        if c == 0.0 {
            return own;
        }
        let shared = self.wardens[0].sample(rng);
        let (a, b) = (c.sqrt(), (1.0 - c).sqrt());
        own.into_iter()
            .map(|t| {
                let mut mixed = shared.base().scaled(a);
                mixed
                    .add_assign(&t.base().scaled(b))
                    .expect("correlated wardens share a tap count");
                TapSet::new(mixed).expect("non-empty taps")
            })
            .collect()
    }

    /// One slot channel per warden.
    pub fn warden_slots(&self, rng: &mut RngStream) -> Vec<SlotChannel> {
        let taps = self.warden_taps(rng);
        taps.iter()
            .zip(&self.scenario.wardens)
            .map(|(t, cfg)| {
                let t0 = self.slot_time(rng);
                SlotChannel::new(t, t0, cfg, self.scenario.slot_len)
            })
            .collect()
    }
}

/// Complex AWGN of the given variance in split layout.
pub(crate) fn awgn_split(n: usize, variance: f64, rng: &mut RngStream) -> Vec<f64> {
    let sd = (variance / 2.0).sqrt();
    (0..2 * n).map(|_| sd * rng.standard_normal()).collect()
}

/// Applies a slot channel to a split-layout signal.
pub(crate) fn apply_split(channel: &SlotChannel, s: &[f64]) -> Result<Vec<f64>> {
    Ok(channel.apply(&ComplexVec::from_split(s)?)?.to_split())
}

/// Adjoint of [`apply_split`].
pub(crate) fn adjoint_split(channel: &SlotChannel, g: &[f64]) -> Result<Vec<f64>> {
    Ok(channel.adjoint(&ComplexVec::from_split(g)?).to_split())
}

/// Anything that turns ±1 message rows into split-layout slot signals.
pub trait Transmitter {
    fn slot_len(&self) -> usize;
    fn message_bits(&self) -> usize;
    /// One signal row per message row.
    fn transmit_batch(&self, messages: ArrayView2<f64>, rng: &mut RngStream)
        -> Result<Array2<f64>>;
}

/// Bob-side decoding: soft outputs whose sign is the decided ±1 symbol.
pub trait Receiver {
    fn decode_batch(&self, y: ArrayView2<f64>, channels: &[SlotChannel]) -> Result<Array2<f64>>;
}

/// Emits nothing; every warden observes pure noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Silent {
    pub slot_len: usize,
    pub message_bits: usize,
}

impl Transmitter for Silent {
    fn slot_len(&self) -> usize {
        self.slot_len
    }

    fn message_bits(&self) -> usize {
        self.message_bits
    }

    fn transmit_batch(
        &self,
        messages: ArrayView2<f64>,
        _rng: &mut RngStream,
    ) -> Result<Array2<f64>> {
        Ok(Array2::zeros((messages.nrows(), 2 * self.slot_len)))
    }
}

/// Sizes and targets for detection measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// H0 samples used to set each learned warden's threshold; the same
    /// number of fresh H0 samples measures its false-alarm rate.
    pub calibration: usize,
    /// Test cases, each one channel realization per warden.
    pub cases: usize,
    pub signals_per_case: usize,
    /// Target false-alarm rate.
    pub pf: f64,
    /// Covertness threshold on per-case detection probability.
    pub epsilon: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            calibration: 10_000,
            cases: 1000,
            signals_per_case: 10,
            pf: 0.1,
            epsilon: 0.1,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.calibration == 0 {
            return Err(Error::config("detection.calibration", "must be positive"));
        }
        if self.cases == 0 || self.signals_per_case == 0 {
            return Err(Error::config(
                "detection.cases",
                "cases and signals_per_case must be positive",
            ));
        }
        if !(self.pf > 0.0 && self.pf < 1.0) {
            return Err(Error::config("detection.pf", "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("detection.epsilon", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn trials(&self) -> usize {
        self.cases * self.signals_per_case
    }
}

/// A warden used for measurement.
#[derive(Debug, Clone, Copy)]
pub enum WardenModel<'a> {
    /// Network whose output is the probability (or score) of "noise".
    Learned(&'a Network),
    /// Matched LRT that knows the noise-free received signal.
    Genie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardenReport {
    pub pd: f64,
    pub pf: f64,
    pub pd_stderr: f64,
    pub pf_stderr: f64,
    /// Constant-output warden: no threshold separates anything.
    pub degenerate: bool,
    /// Detection rate within each test case.
    pub case_pd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub wardens: Vec<WardenReport>,
    pub csr: f64,
    pub epsilon: f64,
    /// Transmitted slots per warden.
    pub trials: usize,
    /// Fewer than 100 trials or 1,000 calibration samples.
    pub low_precision: bool,
}

impl DetectionSummary {
    pub fn mean_pd(&self) -> f64 {
        self.wardens.iter().map(|w| w.pd).sum::<f64>() / self.wardens.len() as f64
    }

    pub fn mean_pf(&self) -> f64 {
        self.wardens.iter().map(|w| w.pf).sum::<f64>() / self.wardens.len() as f64
    }

    pub fn max_pd(&self) -> f64 {
        self.wardens.iter().map(|w| w.pd).fold(0.0, f64::max)
    }
}

/// Fraction of cases in which every warden's detection rate is at most
/// `epsilon`. `case_pd[i][c]` is warden `i`'s rate in case `c`.
pub fn covertness_success_rate(case_pd: &[Vec<f64>], epsilon: f64) -> f64 {
    let cases = case_pd.first().map_or(0, Vec::len);
    if cases == 0 {
        return 0.0;
    }
    let ok = (0..cases)
        .filter(|&c| case_pd.iter().all(|w| w[c] <= epsilon))
        .count();
    ok as f64 / cases as f64
}

/// Threshold `τ` such that a fraction `pf` of `scores` lies strictly below
/// it, plus whether the scores are constant.
fn lower_tail_threshold(mut scores: Vec<f64>, pf: f64) -> (f64, bool) {
    scores.sort_by(f64::total_cmp);
    let degenerate = scores[0] == scores[scores.len() - 1];
    let k = ((pf * scores.len() as f64).round() as usize).min(scores.len() - 1);
    (scores[k], degenerate)
}

fn learned_scores(net: &Network, y: ArrayView2<f64>) -> Result<Vec<f64>> {
    if net.output_dim() != 1 {
        return Err(Error::shape("warden networks must have a single output"));
    }
    Ok(net.predict(y)?.column(0).to_vec())
}

/// Per-warden detection and false-alarm rates plus the covertness success
/// rate.
///
/// Learned wardens decide "signal" when their output falls below a
/// threshold calibrated on fresh H0 samples to the target false-alarm
/// rate; their false-alarm rate is then measured on a second, independent
/// H0 set. The genie warden thresholds its matched statistic analytically
/// for each slot (randomizing at rate `pf` when the received signal is
/// zero).
pub fn measure_detection(
    tx: &dyn Transmitter,
    wardens: &[WardenModel<'_>],
    bank: &ChannelBank,
    cfg: &DetectionConfig,
    rng: &mut RngStream,
) -> Result<DetectionSummary> {
    cfg.validate()?;
    let sc = bank.scenario();
    if wardens.len() != sc.k() {
        return Err(Error::config(
            "K",
            format!("{} warden models for {} links", wardens.len(), sc.k()),
        ));
    }
    if tx.slot_len() != sc.slot_len {
        return Err(Error::shape(
            "transmitter slot length differs from the scenario",
        ));
    }
    let n = sc.slot_len;
    let q = q_inverse(cfg.pf)?;

    let mut thresholds = Vec::with_capacity(wardens.len());
    let mut reports = Vec::with_capacity(wardens.len());
    for (model, link) in wardens.iter().zip(&sc.wardens) {
        let (threshold, pf, degenerate) = match model {
            WardenModel::Learned(net) => {
                let cal = noise_rows(cfg.calibration, n, link.noise_variance, rng);
                let (tau, degenerate) =
                    lower_tail_threshold(learned_scores(net, cal.view())?, cfg.pf);
                let check = noise_rows(cfg.calibration, n, link.noise_variance, rng);
                let alarms = learned_scores(net, check.view())?
                    .iter()
                    .filter(|&&d| d < tau)
                    .count();
                (tau, alarms as f64 / cfg.calibration as f64, degenerate)
            }
            WardenModel::Genie => (f64::NAN, f64::NAN, false),
        };
        thresholds.push(threshold);
        reports.push(WardenReport {
            pd: 0.0,
            pf,
            pd_stderr: 0.0,
            pf_stderr: 0.0,
            degenerate,
            case_pd: Vec::with_capacity(cfg.cases),
        });
    }

    let mut genie_alarms = vec![0usize; wardens.len()];
    let per = cfg.signals_per_case as f64;
    for _ in 0..cfg.cases {
        let slots = bank.warden_slots(rng);
        let messages = random_messages(cfg.signals_per_case, tx.message_bits(), rng);
        let signals = tx.transmit_batch(messages.view(), rng)?;
        for (i, (model, link)) in wardens.iter().zip(&sc.wardens).enumerate() {
            let channels = vec![slots[i].clone(); cfg.signals_per_case];
            let x = propagate_rows(&channels, signals.view(), None)?;
            let noise = noise_rows(cfg.signals_per_case, n, link.noise_variance, rng);
            let y = &x + &noise;
            let detections = match model {
                WardenModel::Learned(net) => learned_scores(net, y.view())?
                    .iter()
                    .filter(|&&d| d < thresholds[i])
                    .count(),
                WardenModel::Genie => {
                    let h0 = noise_rows(cfg.signals_per_case, n, link.noise_variance, rng);
                    let mut hits = 0;
                    for ((xr, yr), nr) in x.rows().into_iter().zip(y.rows()).zip(h0.rows()) {
                        let energy = xr.dot(&xr);
                        if energy == 0.0 {
                            hits += (rng.uniform() < cfg.pf) as usize;
                            genie_alarms[i] += (rng.uniform() < cfg.pf) as usize;
                            continue;
                        }
                        let tau = (2.0 * link.noise_variance * energy).sqrt() * q;
                        hits += (2.0 * yr.dot(&xr) > tau) as usize;
                        genie_alarms[i] += (2.0 * nr.dot(&xr) > tau) as usize;
                    }
                    hits
                }
            };
            reports[i].case_pd.push(detections as f64 / per);
        }
    }

    let trials = cfg.trials();
    for (i, (r, model)) in reports.iter_mut().zip(wardens).enumerate() {
        r.pd = r.case_pd.iter().sum::<f64>() / cfg.cases as f64;
        r.pd_stderr = binomial_stderr(r.pd, trials);
        let pf_trials = match model {
            WardenModel::Learned(_) => cfg.calibration,
            WardenModel::Genie => {
                r.pf = genie_alarms[i] as f64 / trials as f64;
                trials
            }
        };
        r.pf_stderr = binomial_stderr(r.pf, pf_trials);
    }
    let case_pd: Vec<Vec<f64>> = reports.iter().map(|r| r.case_pd.clone()).collect();
    Ok(DetectionSummary {
        csr: covertness_success_rate(&case_pd, cfg.epsilon),
        wardens: reports,
        epsilon: cfg.epsilon,
        trials,
        low_precision: trials < 100 || cfg.calibration < 1000,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub ber: f64,
    pub errors: usize,
    pub bits: usize,
    pub stderr: f64,
}

/// Empirical bit error rate at Bob; every message sees its own channel
/// realization.
pub fn measure_ber(
    tx: &dyn Transmitter,
    rx: &dyn Receiver,
    bank: &ChannelBank,
    messages: usize,
    rng: &mut RngStream,
) -> Result<BerReport> {
    if messages == 0 {
        return Err(Error::config("ber_messages", "must be positive"));
    }
    let sc = bank.scenario();
    const CHUNK: usize = 1000;
    let mut errors = 0;
    let mut done = 0;
    while done < messages {
        let rows = CHUNK.min(messages - done);
        let m = random_messages(rows, tx.message_bits(), rng);
        let s = tx.transmit_batch(m.view(), rng)?;
        let channels: Vec<SlotChannel> = (0..rows).map(|_| bank.bob_slot(rng)).collect();
        let noise = noise_rows(rows, sc.slot_len, sc.bob.noise_variance, rng);
        let y = propagate_rows(&channels, s.view(), Some(noise.view()))?;
        let soft = rx.decode_batch(y.view(), &channels)?;
        if soft.dim() != m.dim() {
            return Err(Error::shape(
                "decoder output shape differs from the messages",
            ));
        }
        errors += soft
            .iter()
            .zip(m.iter())
            .filter(|(&o, &b)| (o > 0.0) != (b > 0.0))
            .count();
        done += rows;
    }
    let bits = messages * tx.message_bits();
    let ber = errors as f64 / bits as f64;
    Ok(BerReport {
        ber,
        errors,
        bits,
        stderr: binomial_stderr(ber, bits),
    })
}

/// BER at each Bob SNR (dB) of `grid`; SNR is `P/σ_B²`.
pub fn measure_ber_curve(
    tx: &dyn Transmitter,
    rx: &dyn Receiver,
    scenario: &Scenario,
    grid_db: &[f64],
    messages: usize,
    rng: &mut RngStream,
) -> Result<Vec<(f64, BerReport)>> {
    grid_db
        .iter()
        .map(|&snr| {
            let bank = ChannelBank::new(&scenario.with_bob_snr_db(snr))?;
            Ok((snr, measure_ber(tx, rx, &bank, messages, rng)?))
        })
        .collect()
}

/// Spread BPSK at a fraction `α` of the budget plus a Gaussian mask carrying
/// the rest, decoded at Bob with a matched filter and chip combining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseInjection {
    pub alpha: f64,
    pub slot_len: usize,
    pub message_bits: usize,
    pub power: f64,
}

impl NoiseInjection {
    pub fn new(alpha: f64, scenario: &Scenario, message_bits: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config("alpha", "must lie in (0, 1]"));
        }
        if message_bits == 0 || message_bits > scenario.slot_len {
            return Err(Error::config("message_bits", "must lie in 1..=slot_len"));
        }
        Ok(Self {
            alpha,
            slot_len: scenario.slot_len,
            message_bits,
            power: scenario.power,
        })
    }

    /// Samples carrying each bit.
    pub fn chips(&self) -> usize {
        self.slot_len / self.message_bits
    }
}

impl Transmitter for NoiseInjection {
    fn slot_len(&self) -> usize {
        self.slot_len
    }

    fn message_bits(&self) -> usize {
        self.message_bits
    }

    fn transmit_batch(
        &self,
        messages: ArrayView2<f64>,
        rng: &mut RngStream,
    ) -> Result<Array2<f64>> {
        if messages.ncols() != self.message_bits {
            return Err(Error::shape("message width differs from the baseline's"));
        }
        let n = self.slot_len;
        let chips = self.chips();
        let amp = (self.alpha * self.power / n as f64).sqrt();
        let mask = ((1.0 - self.alpha) * self.power).sqrt();
        let mut out = Array2::zeros((messages.nrows(), 2 * n));
        for (m, mut row) in messages.rows().into_iter().zip(out.rows_mut()) {
            let g = awgn_split(n, 1.0 / n as f64, rng);
            let row = row.as_slice_mut().expect("row-major");
            for (k, v) in row.iter_mut().enumerate() {
                let bpsk = if k < n && k / chips < self.message_bits {
                    amp * m[k / chips]
                } else {
                    0.0
                };
                *v = bpsk + mask * g[k];
            }
            crate::adversarial::project_power(row, self.power);
        }
        Ok(out)
    }
}

impl Receiver for NoiseInjection {
    fn decode_batch(&self, y: ArrayView2<f64>, channels: &[SlotChannel]) -> Result<Array2<f64>> {
        let r = adjoint_rows(channels, y)?;
        let chips = self.chips();
        Ok(Array2::from_shape_fn(
            (r.nrows(), self.message_bits),
            |(row, b)| (b * chips..(b + 1) * chips).map(|k| r[(row, k)]).sum(),
        ))
    }
}

/// Finds the largest-mask noise-injection baseline whose BER does not exceed
/// `target_ber` by bisection on `α` (common random numbers across probes).
pub fn match_noise_injection(
    target_ber: f64,
    scenario: &Scenario,
    message_bits: usize,
    messages: usize,
    rng: &RngStream,
) -> Result<(NoiseInjection, BerReport)> {
    let bank = ChannelBank::new(scenario)?;
    let probe = |alpha: f64| -> Result<(NoiseInjection, BerReport)> {
        let ni = NoiseInjection::new(alpha, scenario, message_bits)?;
        let ber = measure_ber(&ni, &ni, &bank, messages, &mut rng.clone())?;
        Ok((ni, ber))
    };
    let mut best = probe(1.0)?;
    if best.1.ber > target_ber {
        return Ok(best);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        let cand = probe(mid)?;
        if cand.1.ber <= target_ber {
            hi = mid;
            best = cand;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

/// Post-hoc warden training against a frozen transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreshWardenConfig {
    pub steps: usize,
    pub batch: usize,
    pub hidden: Vec<usize>,
    pub adam: AdamConfig,
}

impl Default for FreshWardenConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch: 64,
            hidden: vec![64, 64, 64],
            adam: AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            },
        }
    }
}

/// New sigmoid discriminators, one per scenario warden, trained to separate
/// `tx`'s observed slots from noise.
pub fn train_fresh_wardens(
    tx: &dyn Transmitter,
    bank: &ChannelBank,
    cfg: &FreshWardenConfig,
    rng: &mut RngStream,
) -> Result<Vec<Network>> {
    if cfg.steps == 0 || cfg.batch == 0 {
        return Err(Error::config(
            "fresh_wardens",
            "steps and batch must be positive",
        ));
    }
    cfg.adam.validate()?;
    let sc = bank.scenario();
    let n = sc.slot_len;
    let mut nets = sc
        .wardens
        .iter()
        .map(|_| {
            Network::init(
                discriminator_layers(n, &cfg.hidden, LossMode::Standard),
                rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut opts: Vec<AdamState> = nets
        .iter()
        .map(|w| AdamState::new(w.params(), cfg.adam))
        .collect();
    for _ in 0..cfg.steps {
        let m = random_messages(cfg.batch, tx.message_bits(), rng);
        let s = tx.transmit_batch(m.view(), rng)?;
        let slots: Vec<Vec<SlotChannel>> = (0..cfg.batch).map(|_| bank.warden_slots(rng)).collect();
        for (i, ((net, opt), link)) in nets.iter_mut().zip(&mut opts).zip(&sc.wardens).enumerate() {
            let channels: Vec<SlotChannel> = slots.iter().map(|v| v[i].clone()).collect();
            let y1 = propagate_rows(
                &channels,
                s.view(),
                Some(noise_rows(cfg.batch, n, link.noise_variance, rng).view()),
            )?;
            let y0 = noise_rows(cfg.batch, n, link.noise_variance, rng);
            let obj = discriminator_loss(net, y0.view(), y1.view())?;
            opt.update(net, &obj.descent_grad)?;
        }
    }
    Ok(nets)
}

/// Settings for a full post-training evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub detection: DetectionConfig,
    pub fresh_wardens: FreshWardenConfig,
    pub ber_messages: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            detection: DetectionConfig::default(),
            fresh_wardens: FreshWardenConfig::default(),
            ber_messages: 2000,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.detection.validate()?;
        if self.ber_messages == 0 {
            return Err(Error::config("eval.ber_messages", "must be positive"));
        }
        Ok(())
    }
}

/// Metrics of one method on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub scenario: String,
    pub seed: u64,
    /// Post-hoc learned wardens.
    pub learned: DetectionSummary,
    /// Genie matched-filter wardens.
    pub genie: DetectionSummary,
    pub ber: BerReport,
}

impl MetricsReport {
    pub fn k(&self) -> usize {
        self.learned.wardens.len()
    }

    /// Flattened result rows.
    pub fn rows(&self) -> Vec<Row> {
        let row = |metric: String, value: f64, stderr: f64| Row {
            method: self.method.clone(),
            scenario: self.scenario.clone(),
            k: self.k(),
            metric,
            value,
            stderr,
            seed: Some(self.seed),
        };
        let mut rows = Vec::new();
        for (prefix, det) in [("", &self.learned), ("genie_", &self.genie)] {
            for (i, w) in det.wardens.iter().enumerate() {
                rows.push(row(format!("{prefix}pd@warden={i}"), w.pd, w.pd_stderr));
                rows.push(row(format!("{prefix}pf@warden={i}"), w.pf, w.pf_stderr));
            }
            let k = det.wardens.len() as f64;
            let se = det
                .wardens
                .iter()
                .map(|w| w.pd_stderr.powi(2))
                .sum::<f64>()
                .sqrt()
                / k;
            rows.push(row(format!("{prefix}mean_pd"), det.mean_pd(), se));
            rows.push(row(format!("{prefix}mean_pf"), det.mean_pf(), f64::NAN));
            let cases = det.wardens.first().map_or(0, |w| w.case_pd.len());
            rows.push(row(
                format!("{prefix}csr"),
                det.csr,
                binomial_stderr(det.csr, cases),
            ));
        }
        rows.push(row("ber".into(), self.ber.ber, self.ber.stderr));
        rows
    }
}

/// Fresh learned wardens and genie wardens against `tx`, plus Bob's BER.
pub fn evaluate(
    method: &str,
    tx: &dyn Transmitter,
    rx: &dyn Receiver,
    scenario: &Scenario,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let bank = ChannelBank::new(scenario)?;
    let root = RngStream::new(seed, 0x5EED_E7A1);
    let nets = train_fresh_wardens(tx, &bank, &cfg.fresh_wardens, &mut root.fork(0))?;
    let models: Vec<WardenModel<'_>> = nets.iter().map(WardenModel::Learned).collect();
    let learned = measure_detection(tx, &models, &bank, &cfg.detection, &mut root.fork(1))?;
    let genie_models = vec![WardenModel::Genie; scenario.k()];
    let genie = measure_detection(tx, &genie_models, &bank, &cfg.detection, &mut root.fork(2))?;
    let ber = measure_ber(tx, rx, &bank, cfg.ber_messages, &mut root.fork(3))?;
    Ok(MetricsReport {
        method: method.into(),
        scenario: scenario.preset.name().into(),
        seed,
        learned,
        genie,
        ber,
    })
}

/// Trains the K = 1 system whose single discriminator models the average
/// warden of `scenario`.
pub fn single_discriminator_baseline(
    cfg: &TrainConfig,
    scenario: &Scenario,
    seed: u64,
) -> Result<(TrainedSystem, TrainLog)> {
    let mut cfg = cfg.clone();
    cfg.lambdas = None;
    train(&cfg, &scenario.averaged_warden(), seed)
}

/// One result row: `method, scenario, K, metric, value, stderr, seed`.
/// Sweep coordinates are encoded in the metric name as `name@key=value`;
/// summary rows carry no seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: String,
    pub scenario: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub seed: Option<u64>,
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::shape(
            "spearman needs two equal-length samples of size ≥ 2",
        ));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Experiment sweeps over the trained system and the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    PdVsK,
    BerVsSnr,
    CsrVsEpochs,
    PdDistribution,
    Adaptive,
    BerVsLayers,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [
        SweepKind::PdVsK,
        SweepKind::BerVsSnr,
        SweepKind::CsrVsEpochs,
        SweepKind::PdDistribution,
        SweepKind::Adaptive,
        SweepKind::BerVsLayers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::PdVsK => "pd-vs-k",
            SweepKind::BerVsSnr => "ber-vs-snr",
            SweepKind::CsrVsEpochs => "csr-vs-epochs",
            SweepKind::PdDistribution => "pd-distribution",
            SweepKind::Adaptive => "adaptive",
            SweepKind::BerVsLayers => "ber-vs-layers",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::config(
                    "sweep",
                    format!("unknown sweep {s:?}; expected one of {}", names.join(", ")),
                )
            })
    }
}

/// Which networks the depth sweep deepens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerTarget {
    #[default]
    Both,
    Generator,
    Decoder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seeds: Vec<u64>,
    pub k_grid: Vec<usize>,
    pub snr_grid_db: Vec<f64>,
    /// Messages decoded per BER point.
    pub ber_messages: usize,
    pub depths: Vec<usize>,
    #[serde(default)]
    pub layer_target: LayerTarget,
    pub adaptive: AdaptiveConfig,
    /// Iterations averaged per adaptive-trace summary point.
    pub adaptive_window: usize,
    /// Parallel seed jobs; results do not depend on it.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            k_grid: vec![2, 3, 4, 5],
            snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            ber_messages: 1250,
            depths: vec![3, 5, 8, 10],
            layer_target: LayerTarget::Both,
            adaptive: AdaptiveConfig::default(),
            adaptive_window: 500,
            workers: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.k_grid.contains(&0) {
            return Err(Error::config("K", "sweep values must be positive"));
        }
        if self.depths.contains(&0) {
            return Err(Error::config("depths", "must be positive"));
        }
        if self.ber_messages == 0 || self.adaptive_window == 0 || self.workers == 0 {
            return Err(Error::config(
                "sweep",
                "ber_messages, adaptive_window and workers must be positive",
            ));
        }
        self.adaptive.validate()
    }
}

/// Everything one training-based experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub scenario: Scenario,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

/// Rows of a sweep plus any per-iteration traces it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kind: SweepKind,
    pub rows: Vec<Row>,
    /// `(seed, trace)` for the adaptive sweep.
    pub traces: Vec<(u64, AdaptiveTrace)>,
}

impl SweepTable {
    /// Summary rows only.
    pub fn summary(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.seed.is_none())
    }
}

/// Maps `f` over `items` on up to `workers` threads, preserving order.
pub fn parallel_map<T: Sync, U: Send, E: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> std::result::Result<U, E> + Sync,
) -> std::result::Result<Vec<U>, E> {
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                scope.spawn(|| {
                    part.iter()
                        .map(&f)
                        .collect::<std::result::Result<Vec<U>, E>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            match h.join() {
                Ok(part) => out.extend(part?),
                Err(panic) => std::panic::resume_unwind(panic),
            }
        }
        Ok(out)
    })
}

/// `base` with `k` wardens, cycling through its links.
pub fn scenario_with_k(base: &Scenario, k: usize) -> Scenario {
    Scenario {
        wardens: (0..k).map(|i| base.wardens[i % base.k()].clone()).collect(),
        ..base.clone()
    }
}

fn train_quietly(
    cfg: &TrainConfig,
    scenario: &Scenario,
    seed: u64,
) -> Result<(TrainedSystem, TrainLog)> {
    let mut cfg = cfg.clone();
    cfg.snapshots.every = 0;
    train(&cfg, scenario, seed)
}

/// Builds seed rows and, per `(method, metric, K)`, a summary row holding
/// the mean over seeds and its standard error.
fn with_summaries(mut rows: Vec<Row>) -> Vec<Row> {
    let mut keys: Vec<(String, String, usize, String)> = Vec::new();
    for r in rows.iter().filter(|r| r.seed.is_some()) {
        let key = (r.method.clone(), r.scenario.clone(), r.k, r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let summaries: Vec<Row> = keys
        .into_iter()
        .map(|(method, scenario, k, metric)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| {
                    r.seed.is_some()
                        && r.method == method
                        && r.scenario == scenario
                        && r.k == k
                        && r.metric == metric
                })
                .map(|r| r.value)
                .collect();
            let (mean, se) = mean_and_stderr(&v);
            Row {
                method,
                scenario,
                k,
                metric,
                value: mean,
                stderr: se,
                seed: None,
            }
        })
        .collect();
    rows.extend(summaries);
    rows
}

/// Sample mean and standard error of the mean (NaN error for one value).
pub fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn seed_row(
    method: &str,
    scenario: &Scenario,
    metric: String,
    value: f64,
    stderr: f64,
    seed: u64,
) -> Row {
    Row {
        method: method.into(),
        scenario: scenario.preset.name().into(),
        k: scenario.k(),
        metric,
        value,
        stderr,
        seed: Some(seed),
    }
}

fn detection_rows(method: &str, sc: &Scenario, rep: &MetricsReport, seed: u64) -> Vec<Row> {
    let det = &rep.learned;
    let cases = det.wardens.first().map_or(0, |w| w.case_pd.len());
    vec![
        seed_row(method, sc, "mean_pd".into(), det.mean_pd(), f64::NAN, seed),
        seed_row(method, sc, "max_pd".into(), det.max_pd(), f64::NAN, seed),
        seed_row(
            method,
            sc,
            "csr".into(),
            det.csr,
            binomial_stderr(det.csr, cases),
            seed,
        ),
        seed_row(
            method,
            sc,
            "genie_mean_pd".into(),
            rep.genie.mean_pd(),
            f64::NAN,
            seed,
        ),
        seed_row(method, sc, "ber".into(), rep.ber.ber, rep.ber.stderr, seed),
    ]
}

/// Proposed system, single-discriminator baseline and BER-matched noise
/// injection, each evaluated against fresh wardens.
pub fn compare_methods(exp: &Experiment, seed: u64) -> Result<Vec<MetricsReport>> {
    let sc = &exp.scenario;
    let (sys, _) = train_quietly(&exp.train, sc, seed)?;
    let proposed = evaluate(
        "proposed",
        &sys.generator,
        &sys.decoder,
        sc,
        &exp.eval,
        seed,
    )?;
    let (single, _) = {
        let mut cfg = exp.train.clone();
        cfg.snapshots.every = 0;
        single_discriminator_baseline(&cfg, sc, seed)?
    };
    let single = evaluate(
        "single-disc",
        &single.generator,
        &single.decoder,
        sc,
        &exp.eval,
        seed,
    )?;
    let (ni, _) = match_noise_injection(
        proposed.ber.ber,
        sc,
        exp.train.architecture.message_bits,
        exp.eval.ber_messages,
        &RngStream::new(seed, 0xB45E),
    )?;
    let injected = evaluate("noise-injection", &ni, &ni, sc, &exp.eval, seed)?;
    Ok(vec![proposed, single, injected])
}

/// Runs one named sweep; every seed is an independent job.
pub fn run_sweeps(kind: SweepKind, exp: &Experiment, cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    exp.scenario.validate()?;
    exp.eval.validate()?;
    let mut traces = Vec::new();
    let rows: Vec<Row> = match kind {
        SweepKind::PdVsK => {
            let jobs: Vec<(usize, u64)> = cfg
                .k_grid
                .iter()
                .flat_map(|&k| cfg.seeds.iter().map(move |&s| (k, s)))
                .collect();
            parallel_map(&jobs, cfg.workers, |&(k, seed)| {
                let sc = scenario_with_k(&exp.scenario, k);
                let reports = compare_methods(
                    &Experiment {
                        scenario: sc.clone(),
                        ..exp.clone()
                    },
                    seed,
                )?;
                Ok(reports
                    .iter()
                    .flat_map(|r| detection_rows(&r.method, &sc, r, seed))
                    .collect::<Vec<_>>())
            })?
            .concat()
        }
        SweepKind::BerVsSnr => parallel_map(&cfg.seeds, cfg.workers, |&seed| {
            let sc = &exp.scenario;
            let (sys, _) = train_quietly(&exp.train, sc, seed)?;
            let root = RngStream::new(seed, 0xB5);
            let at_target = measure_ber(
                &sys.generator,
                &sys.decoder,
                &ChannelBank::new(sc)?,
                cfg.ber_messages,
                &mut root.fork(0),
            )?;
            let (ni, _) = match_noise_injection(
                at_target.ber,
                sc,
                exp.train.architecture.message_bits,
                cfg.ber_messages,
                &root.fork(1),
            )?;
            let mut rows = Vec::new();
            for (method, tx, rx) in [
                (
                    "proposed",
                    &sys.generator as &dyn Transmitter,
                    &sys.decoder as &dyn Receiver,
                ),
                ("noise-injection", &ni, &ni),
            ] {
                let curve = measure_ber_curve(
                    tx,
                    rx,
                    sc,
                    &cfg.snr_grid_db,
                    cfg.ber_messages,
                    &mut root.fork(2),
                )?;
                let (x, y): (Vec<f64>, Vec<f64>) = curve.iter().map(|(s, b)| (*s, b.ber)).unzip();
                for (snr, b) in &curve {
                    rows.push(seed_row(
                        method,
                        sc,
                        format!("ber@snr_db={snr}"),
                        b.ber,
                        b.stderr,
                        seed,
                    ));
                }
                if x.len() >= 2 {
                    rows.push(seed_row(
                        method,
                        sc,
                        "spearman".into(),
                        spearman(&x, &y)?,
                        f64::NAN,
                        seed,
                    ));
                }
            }
            Ok(rows)
        })?
        .concat(),
        SweepKind::CsrVsEpochs => {
            let per_seed = parallel_map(&cfg.seeds, cfg.workers, |&seed| {
                let sc = &exp.scenario;
                let (_, log) = train(&exp.train, sc, seed)?;
                let curve = log.csr_curve();
                let cases = exp.train.snapshots.detection.cases;
                let mut rows: Vec<Row> = curve
                    .iter()
                    .map(|&(t, c)| {
                        seed_row(
                            "proposed",
                            sc,
                            format!("csr@iteration={t}"),
                            c,
                            binomial_stderr(c, cases),
                            seed,
                        )
                    })
                    .collect();
                let gain = curve.last().map_or(0.0, |l| l.1) - curve[0].1;
                rows.push(seed_row(
                    "proposed",
                    sc,
                    "csr_gain".into(),
                    gain,
                    f64::NAN,
                    seed,
                ));
                let best = best_improvement_window(&curve, 100);
                let early = best.is_some_and(|t| 2 * t < exp.train.iterations);
                rows.push(seed_row(
                    "proposed",
                    sc,
                    "best_window_in_first_half".into(),
                    early as u8 as f64,
                    f64::NAN,
                    seed,
                ));
                Ok(rows)
            })?
            .concat();
            let mut rows = per_seed;
            let trend = csr_trend(&rows);
            rows.push(Row {
                method: "proposed".into(),
                scenario: exp.scenario.preset.name().into(),
                k: exp.scenario.k(),
                metric: "csr_trend_increasing".into(),
                value: trend as u8 as f64,
                stderr: f64::NAN,
                seed: None,
            });
            rows
        }
        SweepKind::PdDistribution => parallel_map(&cfg.seeds, cfg.workers, |&seed| {
            let sc = &exp.scenario;
            let (sys, _) = train_quietly(&exp.train, sc, seed)?;
            let rep = evaluate(
                "proposed",
                &sys.generator,
                &sys.decoder,
                sc,
                &exp.eval,
                seed,
            )?;
            let per = exp.eval.detection.signals_per_case;
            let mut rows = Vec::new();
            for (i, w) in rep.learned.wardens.iter().enumerate() {
                for hits in 0..=per {
                    let pd = hits as f64 / per as f64;
                    let frac = w
                        .case_pd
                        .iter()
                        .filter(|&&c| (c - pd).abs() < 0.5 / per as f64)
                        .count() as f64
                        / w.case_pd.len() as f64;
                    rows.push(seed_row(
                        "proposed",
                        sc,
                        format!("case_fraction@warden={i},pd={pd}"),
                        frac,
                        f64::NAN,
                        seed,
                    ));
                }
            }
            Ok(rows)
        })?
        .concat(),
        SweepKind::Adaptive => {
            let out = parallel_map(&cfg.seeds, cfg.workers, |&seed| {
                let sc = &exp.scenario;
                let (mut sys, _) = train_quietly(&exp.train, sc, seed)?;
                let bank = ChannelBank::new(sc)?;
                let trace = crate::adversarial::adaptive_warden_loop(
                    &sys.generator,
                    &mut sys.adversaries,
                    &bank,
                    &cfg.adaptive,
                    exp.train.adam,
                    &RngStream::new(seed, 0xADA),
                )?;
                let w = cfg.adaptive_window;
                let rows: Vec<Row> = (0..trace.metric.len().div_ceil(w))
                    .map(|j| {
                        let range = j * w..((j + 1) * w).min(trace.metric.len());
                        seed_row(
                            "proposed",
                            sc,
                            format!("covertness_metric@start={}", range.start),
                            trace.mean(range),
                            f64::NAN,
                            seed,
                        )
                    })
                    .collect();
                Ok((rows, (seed, trace)))
            })?;
            let mut rows = Vec::new();
            for (r, t) in out {
                rows.extend(r);
                traces.push(t);
            }
            rows
        }
        SweepKind::BerVsLayers => {
            let jobs: Vec<(usize, u64)> = cfg
                .depths
                .iter()
                .flat_map(|&d| cfg.seeds.iter().map(move |&s| (d, s)))
                .collect();
            parallel_map(&jobs, cfg.workers, |&(depth, seed)| {
                let sc = &exp.scenario;
                let mut train_cfg = exp.train.clone();
                let deep = train_cfg.architecture.with_depth(depth);
                match cfg.layer_target {
                    LayerTarget::Both => train_cfg.architecture = deep,
                    LayerTarget::Generator => {
                        train_cfg.architecture.generator_hidden = deep.generator_hidden
                    }
                    LayerTarget::Decoder => {
                        train_cfg.architecture.decoder_hidden = deep.decoder_hidden
                    }
                }
                let (sys, _) = train_quietly(&train_cfg, sc, seed)?;
                let b = measure_ber(
                    &sys.generator,
                    &sys.decoder,
                    &ChannelBank::new(sc)?,
                    cfg.ber_messages,
                    &mut RngStream::new(seed, 0x1A7E),
                )?;
                Ok(vec![seed_row(
                    "proposed",
                    sc,
                    format!("ber@depth={depth}"),
                    b.ber,
                    b.stderr,
                    seed,
                )])
            })?
            .concat()
        }
    };
    Ok(SweepTable {
        kind,
        rows: with_summaries(rows),
        traces,
    })
}

/// Iteration at which the largest CSR gain over `span` iterations begins.
pub fn best_improvement_window(curve: &[(usize, f64)], span: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &(t0, c0)) in curve.iter().enumerate() {
        if let Some(&(_, c1)) = curve[i + 1..]
            .iter()
            .take_while(|p| p.0 - t0 <= span)
            .last()
        {
            if best.is_none_or(|b| c1 - c0 > b.1) {
                best = Some((t0, c1 - c0));
            }
        }
    }
    best.map(|b| b.0)
}

/// True when the seed-averaged CSR curve rank-correlates positively with
/// iteration.
fn csr_trend(rows: &[Row]) -> bool {
    let mut points: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in rows {
        if let Some(t) = r
            .metric
            .strip_prefix("csr@iteration=")
            .and_then(|t| t.parse::<f64>().ok())
        {
            match points.iter_mut().find(|p| p.0 == t) {
                Some(p) => p.1.push(r.value),
                None => points.push((t, vec![r.value])),
            }
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .map(|(t, v)| (*t, mean_and_stderr(v).0))
        .unzip();
    spearman(&x, &y).is_ok_and(|r| r > 0.0)
}
