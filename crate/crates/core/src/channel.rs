//! Time-varying, frequency-selective, spatially correlated channels and the
//! received-signal model under both hypotheses.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    fill_awgn, sample_cgn_with_factor, CholeskyFactor, ComplexVec, CorrelationMatrix, RngStream,
};

/// Parameters of one transmitter→receiver link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Number of taps `L`.
    pub taps: usize,
    /// Exponential correlation coefficient between taps.
    pub rho: f64,
    /// Doppler shift in Hz.
    pub doppler_hz: f64,
    /// Symbol duration in seconds; tap `l` is delayed by `l` symbols.
    pub symbol_period: f64,
    /// Receiver noise variance σ².
    pub noise_variance: f64,
    /// Rotate taps per sample instead of once per slot.
    #[serde(default)]
    pub per_sample_doppler: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            taps: 4,
            rho: 0.5,
            doppler_hz: 10.0,
            symbol_period: 1e-6,
            noise_variance: 1.0,
            per_sample_doppler: false,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::config("taps", "need at least one tap"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::config(
                "rho",
                format!("{} is outside [0, 1)", self.rho),
            ));
        }
        if self.doppler_hz < 0.0 || !self.doppler_hz.is_finite() {
            return Err(Error::config(
                "doppler_hz",
                "must be finite and non-negative",
            ));
        }
        if self.symbol_period <= 0.0 || !self.symbol_period.is_finite() {
            return Err(Error::config("symbol_period", "must be positive"));
        }
        if self.noise_variance <= 0.0 || !self.noise_variance.is_finite() {
            return Err(Error::config("noise_variance", "must be positive"));
        }
        Ok(())
    }

    pub fn correlation(&self) -> Result<CorrelationMatrix> {
        CorrelationMatrix::new(self.taps, self.rho)
    }
}

/// Base tap gains `h̃_0..h̃_{L-1}` of one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapSet {
    base: ComplexVec,
}

impl TapSet {
    pub fn new(base: ComplexVec) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::shape("a tap set needs at least one tap"));
        }
        Ok(Self { base })
    }

    pub fn base(&self) -> &ComplexVec {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Taps after Doppler rotation at time `t`.
    pub fn at(&self, t: f64, doppler_hz: f64) -> ComplexVec {
        doppler_rotate(self, t, doppler_hz)
    }

    /// `|h̃_l|²` per tap.
    pub fn powers(&self) -> Vec<f64> {
        self.base
            .re()
            .iter()
            .zip(self.base.im())
            .map(|(r, i)| r * r + i * i)
            .collect()
    }
}

/// Draws tap sets for a fixed configuration, reusing the Cholesky factor.
#[derive(Debug, Clone)]
pub struct TapSampler {
    factor: CholeskyFactor,
}

impl TapSampler {
    pub fn new(cfg: &ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            factor: cfg.correlation()?.cholesky()?,
        })
    }

    pub fn sample(&self, rng: &mut RngStream) -> TapSet {
        TapSet {
            base: sample_cgn_with_factor(&self.factor, rng),
        }
    }
}

/// Draws `(h̃_0..h̃_{L-1}) ~ CN(0, R)` with `R_{mn} = rho^|m-n|`.
pub fn sample_taps(cfg: &ChannelConfig, rng: &mut RngStream) -> Result<TapSet> {
    Ok(TapSampler::new(cfg)?.sample(rng))
}

/// Multiplies each tap by `exp(j 2π f_d t)`.
pub fn doppler_rotate(taps: &TapSet, t: f64, doppler_hz: f64) -> ComplexVec {
    let mut out = taps.base.clone();
    out.scale_complex(unit_phasor(2.0 * PI * doppler_hz * t));
    out
}

fn unit_phasor(phase: f64) -> (f64, f64) {
    let (s, c) = phase.sin_cos();
    (c, s)
}

/// Zero-prefix linear convolution truncated to `len(s)` outputs:
/// `out[k] = Σ_l h_l s[k-l]`.
pub fn propagate(s: &ComplexVec, taps: &ComplexVec) -> Result<ComplexVec> {
    let n = s.len();
    let l = taps.len();
    if n < l {
        return Err(Error::shape(format!(
            "signal length {n} is shorter than {l} taps"
        )));
    }
    let mut out = ComplexVec::zeros(n);
    convolve_into(s.re(), s.im(), taps, out.parts_mut());
    Ok(out)
}

fn convolve_into(sr: &[f64], si: &[f64], taps: &ComplexVec, out: (&mut [f64], &mut [f64])) {
    let (or, oi) = out;
    let n = sr.len();
    for (l, (&hr, &hi)) in taps.re().iter().zip(taps.im()).enumerate() {
        for k in l..n {
            let (a, b) = (sr[k - l], si[k - l]);
            or[k] += hr * a - hi * b;
            oi[k] += hr * b + hi * a;
        }
    }
}

/// Adjoint of [`propagate`]: maps an output-side gradient `g` (as
/// `∂/∂Re + j∂/∂Im`) to the input side, `Σ_l conj(h_l) g[k+l]`.
pub fn propagate_adjoint(g: &ComplexVec, taps: &ComplexVec) -> ComplexVec {
    let n = g.len();
    let mut out = ComplexVec::zeros(n);
    let (or, oi) = out.parts_mut();
    for (l, (&hr, &hi)) in taps.re().iter().zip(taps.im()).enumerate() {
        for k in 0..n.saturating_sub(l) {
            let (a, b) = g.get(k + l);
            or[k] += hr * a + hi * b;
            oi[k] += hr * b - hi * a;
        }
    }
    out
}

/// A realized linear channel for one slot: convolution with fixed taps
/// followed by a per-sample phase (identity unless per-sample Doppler is on).
#[derive(Debug, Clone)]
pub struct SlotChannel {
    taps: ComplexVec,
    phases: Option<Vec<(f64, f64)>>,
}

impl SlotChannel {
    /// Channel seen by a slot starting at time `t0`.
    pub fn new(taps: &TapSet, t0: f64, cfg: &ChannelConfig, n: usize) -> Self {
        if cfg.per_sample_doppler {
            let phases = (0..n)
                .map(|k| {
                    unit_phasor(2.0 * PI * cfg.doppler_hz * (t0 + k as f64 * cfg.symbol_period))
                })
                .collect();
            Self {
                taps: taps.base.clone(),
                phases: Some(phases),
            }
        } else {
            Self {
                taps: taps.at(t0, cfg.doppler_hz),
                phases: None,
            }
        }
    }

    /// Taps in effect at the slot start (Doppler applied).
    pub fn taps(&self) -> ComplexVec {
        match &self.phases {
            Some(p) if !p.is_empty() => {
                let mut t = self.taps.clone();
                t.scale_complex(p[0]);
                t
            }
            _ => self.taps.clone(),
        }
    }

    /// Noise-free received signal.
    pub fn apply(&self, s: &ComplexVec) -> Result<ComplexVec> {
        let mut out = propagate(s, &self.taps)?;
        if let Some(phases) = &self.phases {
            let (re, im) = out.parts_mut();
            for (k, &(c, si)) in phases.iter().enumerate().take(re.len()) {
                let (a, b) = (re[k], im[k]);
                re[k] = a * c - b * si;
                im[k] = a * si + b * c;
            }
        }
        Ok(out)
    }

    /// Adjoint of [`SlotChannel::apply`].
    pub fn adjoint(&self, g: &ComplexVec) -> ComplexVec {
        match &self.phases {
            None => propagate_adjoint(g, &self.taps),
            Some(phases) => {
                let mut rotated = g.clone();
                let (re, im) = rotated.parts_mut();
                for (k, &(c, s)) in phases.iter().enumerate().take(re.len()) {
                    let (a, b) = (re[k], im[k]);
                    re[k] = a * c + b * s;
                    im[k] = b * c - a * s;
                }
                propagate_adjoint(&rotated, &self.taps)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// No transmission.
    H0,
    /// Transmission present.
    H1,
}

/// One observed slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSlot {
    pub y: ComplexVec,
    pub hypothesis: Hypothesis,
    /// Noise-free received signal, present only under H1.
    pub effective_x: Option<ComplexVec>,
}

/// Observes a slot at time `t`: `y = h(t) * s + n` when `s` is present,
/// pure noise otherwise.
pub fn receive(
    s: Option<&ComplexVec>,
    taps: &TapSet,
    t: f64,
    cfg: &ChannelConfig,
    n: usize,
    rng: &mut RngStream,
) -> Result<ReceivedSlot> {
    cfg.validate()?;
    let mut y = ComplexVec::zeros(n);
    fill_awgn(&mut y, cfg.noise_variance, rng);
    match s {
        None => Ok(ReceivedSlot {
            y,
            hypothesis: Hypothesis::H0,
            effective_x: None,
        }),
        Some(s) => {
            if s.len() != n {
                return Err(Error::shape(format!(
                    "signal length {} but slot length {n}",
                    s.len()
                )));
            }
            let x = SlotChannel::new(taps, t, cfg, n).apply(s)?;
            y.add_assign(&x)?;
            Ok(ReceivedSlot {
                y,
                hypothesis: Hypothesis::H1,
                effective_x: Some(x),
            })
        }
    }
}
