//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a flat `Float64Array`; the layout is given on each
//! function. The `*_points` functions hold the logic and are what the native
//! tests exercise.

use covert_core::channel::{sample_taps, ChannelConfig};
use covert_core::detection::{analytic_ber_bpsk, analytic_pd_at_threshold, calibrate_threshold};
use covert_core::evaluation::{measure_ber_curve, NoiseInjection, Scenario};
use covert_core::numerics::{ComplexVec, RngStream};
use wasm_bindgen::prelude::*;

type DemoResult = Result<Vec<f64>, String>;

/// `(pf, pd)` pairs of the genie likelihood-ratio warden that knows the
/// transmitted slot, for a slot of energy `energy` in noise of variance
/// `sigma2`. False-alarm rates are spread evenly over `(0, 1)`.
pub fn roc_points(energy: f64, sigma2: f64, points: usize) -> DemoResult {
    if points < 2 {
        return Err("need at least two points".into());
    }
    if !(energy > 0.0 && energy.is_finite()) {
        return Err("energy must be positive".into());
    }
    let x = ComplexVec::new(vec![energy.sqrt()], vec![0.0]).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let pf = (i as f64 + 0.5) / points as f64;
        let threshold = calibrate_threshold(&x, sigma2, pf).map_err(|e| e.to_string())?;
        let pd = analytic_pd_at_threshold(threshold, &x, sigma2).map_err(|e| e.to_string())?;
        out.extend([pf, pd]);
    }
    Ok(out)
}

/// One fading realization followed over time. Each of `steps` rows holds the
/// time followed by `(re, im)` of every tap.
pub fn tap_points(
    taps: usize,
    rho: f64,
    doppler_hz: f64,
    duration: f64,
    steps: usize,
    seed: u64,
) -> DemoResult {
    if steps < 2 {
        return Err("need at least two time steps".into());
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err("duration must be positive".into());
    }
    let cfg = ChannelConfig {
        taps,
        rho,
        doppler_hz,
        ..ChannelConfig::default()
    };
    let set = sample_taps(&cfg, &mut RngStream::new(seed, 0)).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(steps * (1 + 2 * taps));
    for i in 0..steps {
        let t = duration * i as f64 / (steps - 1) as f64;
        let h = set.at(t, doppler_hz);
        out.push(t);
        for l in 0..taps {
            let (re, im) = h.get(l);
            out.extend([re, im]);
        }
    }
    Ok(out)
}

/// Bob's bit error rate for the noise-injection transmitter on the urban
/// preset. Rows are `(snr_db, simulated ber, awgn bpsk reference)`.
pub fn ber_points(
    alpha: f64,
    snr_lo_db: f64,
    snr_hi_db: f64,
    points: usize,
    messages: usize,
    seed: u64,
) -> DemoResult {
    if points < 2 || messages == 0 {
        return Err("need at least two points and one message".into());
    }
    if snr_hi_db.is_nan() || snr_lo_db.is_nan() || snr_hi_db <= snr_lo_db {
        return Err("the SNR range is empty".into());
    }
    let sc = Scenario::urban();
    let ni = NoiseInjection::new(alpha, &sc, 8).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..points)
        .map(|i| snr_lo_db + (snr_hi_db - snr_lo_db) * i as f64 / (points - 1) as f64)
        .collect();
    let curve = measure_ber_curve(&ni, &ni, &sc, &grid, messages, &mut RngStream::new(seed, 1))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * points);
    for (snr_db, rep) in curve {
        let reference = analytic_ber_bpsk(10f64.powf(snr_db / 10.0)).map_err(|e| e.to_string())?;
        out.extend([snr_db, rep.ber, reference]);
    }
    Ok(out)
}

fn js(r: DemoResult) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Flat `[pf0, pd0, pf1, pd1, ...]`.
#[wasm_bindgen]
pub fn roc(energy: f64, sigma2: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(roc_points(energy, sigma2, points))
}

/// Flat rows of `[t, re0, im0, re1, im1, ...]`.
#[wasm_bindgen]
pub fn channel_taps(
    taps: usize,
    rho: f64,
    doppler_hz: f64,
    duration: f64,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    js(tap_points(taps, rho, doppler_hz, duration, steps, seed))
}

/// Flat rows of `[snr_db, ber, reference]`.
#[wasm_bindgen]
pub fn ber_curve(
    alpha: f64,
    snr_lo_db: f64,
    snr_hi_db: f64,
    points: usize,
    messages: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    js(ber_points(
        alpha, snr_lo_db, snr_hi_db, points, messages, seed,
    ))
}
