//! Warden-side detection theory: the matched likelihood-ratio test, its
//! threshold calibration and closed-form ROC, the KL covertness budget and
//! the BPSK error probability.
//!
//! The LRT warden here is genie-aided: it knows the noise-free received
//! signal `x` exactly. It upper-bounds any learned warden and serves as the
//! oracle for validating them.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, SlotChannel, TapSet};
use crate::error::{Error, Result};
use crate::numerics::{fill_awgn, q_function, q_inverse, ComplexVec, RngStream};

/// Matched LRT detector `T = 2·Re(yᴴx) > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct LrtWarden {
    pub known_x: ComplexVec,
    pub sigma2: f64,
    /// Threshold on the statistic `T`, not on Λ.
    pub threshold: f64,
}

impl LrtWarden {
    pub fn new(known_x: ComplexVec, sigma2: f64, threshold: f64) -> Result<Self> {
        check_sigma2(sigma2)?;
        if !threshold.is_finite() {
            return Err(Error::domain("LRT threshold must be finite"));
        }
        Ok(Self {
            known_x,
            sigma2,
            threshold,
        })
    }

    /// Warden calibrated to the requested false-alarm rate.
    pub fn calibrated(known_x: ComplexVec, sigma2: f64, target_pf: f64) -> Result<Self> {
        let threshold = calibrate_threshold(&known_x, sigma2, target_pf)?;
        Self::new(known_x, sigma2, threshold)
    }

    pub fn statistic(&self, y: &ComplexVec) -> Result<f64> {
        lrt_statistic(y, &self.known_x)
    }

    /// True when the warden decides H1.
    pub fn decide(&self, y: &ComplexVec) -> Result<bool> {
        Ok(self.statistic(y)? > self.threshold)
    }

    /// Λ-domain threshold γ equivalent to the statistic threshold.
    pub fn gamma(&self) -> f64 {
        ((self.threshold - self.known_x.energy()) / self.sigma2).exp()
    }

    pub fn analytic_pf(&self) -> Result<f64> {
        analytic_pf(self.threshold, &self.known_x, self.sigma2)
    }

    pub fn analytic_pd(&self) -> Result<f64> {
        analytic_pd_at_threshold(self.threshold, &self.known_x, self.sigma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMethod {
    Analytic,
    MonteCarlo,
}

/// Detection and false-alarm probabilities with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub pd: f64,
    pub pf: f64,
    pub trials: usize,
    pub method: DetectionMethod,
}

impl DetectionReport {
    /// Binomial standard error of `pd`.
    pub fn pd_stderr(&self) -> f64 {
        binomial_stderr(self.pd, self.trials)
    }

    pub fn pf_stderr(&self) -> f64 {
        binomial_stderr(self.pf, self.trials)
    }
}

pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(Error::domain(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    Ok(())
}

fn nondegenerate_energy(x: &ComplexVec) -> Result<f64> {
    let e = x.energy();
    if e <= 0.0 || !e.is_finite() {
        return Err(Error::domain(
            "the known signal has zero energy; the test is degenerate",
        ));
    }
    Ok(e)
}

/// `T = 2·Re(yᴴx)`.
pub fn lrt_statistic(y: &ComplexVec, x: &ComplexVec) -> Result<f64> {
    Ok(2.0 * y.inner(x)?.0)
}

/// Statistic threshold giving false-alarm probability `target_pf`; under H0,
/// `T ~ N(0, 2σ²‖x‖²)`.
pub fn calibrate_threshold(x: &ComplexVec, sigma2: f64, target_pf: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    let e = nondegenerate_energy(x)?;
    if !(target_pf > 0.0 && target_pf < 1.0) {
        return Err(Error::domain(format!(
            "target false-alarm rate {target_pf} outside (0, 1)"
        )));
    }
    Ok((2.0 * sigma2 * e).sqrt() * q_inverse(target_pf)?)
}

/// False-alarm probability of a statistic threshold.
pub fn analytic_pf(threshold: f64, x: &ComplexVec, sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    let e = nondegenerate_energy(x)?;
    q_function(threshold / (2.0 * sigma2 * e).sqrt())
}

/// Detection probability of the Λ-threshold γ:
/// `Q((σ² ln γ − ‖x‖²) / √(2σ²‖x‖²))`.
pub fn analytic_pd(gamma: f64, x: &ComplexVec, sigma2: f64) -> Result<f64> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::domain(format!(
            "likelihood-ratio threshold must be positive, got {gamma}"
        )));
    }
    check_sigma2(sigma2)?;
    let e = nondegenerate_energy(x)?;
    q_function((sigma2 * gamma.ln() - e) / (2.0 * sigma2 * e).sqrt())
}

/// Detection probability of a statistic threshold; under H1,
/// `T ~ N(2‖x‖², 2σ²‖x‖²)`.
pub fn analytic_pd_at_threshold(threshold: f64, x: &ComplexVec, sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    let e = nondegenerate_energy(x)?;
    q_function((threshold - 2.0 * e) / (2.0 * sigma2 * e).sqrt())
}

/// Whether the KL budget is conditioned on the realized taps or averaged
/// over the fading distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlMode {
    #[default]
    Averaged,
    Conditional,
}

/// KL covertness budget `Σ_l E[|h_l|²]·‖s‖² / σ²`; `tap_powers` carries the
/// per-tap powers (their expectations in averaged mode, `|h_l|²` when
/// conditioning on a realization).
pub fn kl_covertness(s: &ComplexVec, tap_powers: &[f64], sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    Ok(tap_powers.iter().sum::<f64>() * s.energy() / sigma2)
}

/// KL budget for a tap set under the selected mode; averaged mode uses the
/// unit per-tap mean power of the channel model.
pub fn kl_covertness_for(s: &ComplexVec, taps: &TapSet, sigma2: f64, mode: KlMode) -> Result<f64> {
    match mode {
        KlMode::Averaged => kl_covertness(s, &vec![1.0; taps.len()], sigma2),
        KlMode::Conditional => kl_covertness(s, &taps.powers(), sigma2),
    }
}

/// Exact `D(CN(x, σ²I) ‖ CN(0, σ²I)) = ‖x‖²/σ²`.
pub fn gaussian_kl(x: &ComplexVec, sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    Ok(x.energy() / sigma2)
}

/// Plug-in KL estimate: the average log-likelihood ratio
/// `(2·Re(yᴴx) − ‖x‖²)/σ²` over `draws` samples of `y ~ CN(x, σ²I)`.
pub fn empirical_kl(x: &ComplexVec, sigma2: f64, draws: usize, rng: &mut RngStream) -> Result<f64> {
    check_sigma2(sigma2)?;
    if draws == 0 {
        return Err(Error::domain("empirical KL needs at least one draw"));
    }
    let e = x.energy();
    let mut y = ComplexVec::zeros(x.len());
    let mut total = 0.0;
    for _ in 0..draws {
        fill_awgn(&mut y, sigma2, rng);
        y.add_assign(x)?;
        total += (lrt_statistic(&y, x)? - e) / sigma2;
    }
    Ok(total / draws as f64)
}

/// BPSK bit error probability `Q(√snr)`.
pub fn analytic_ber_bpsk(snr: f64) -> Result<f64> {
    if snr < 0.0 || !snr.is_finite() {
        return Err(Error::domain(format!(
            "SNR must be finite and non-negative, got {snr}"
        )));
    }
    q_function(snr.sqrt())
}

/// Monte Carlo ROC point of a (possibly mismatched) LRT warden.
///
/// The transmitted `s` passes through `taps` (slot start time 0) to form the
/// true effective signal; H0 and H1 slots get independent noise with the
/// channel's variance. Trial `k` draws from stream `rng.fork(k)`, so results
/// do not depend on the worker count.
pub fn monte_carlo_roc(
    warden: &LrtWarden,
    channel: &ChannelConfig,
    taps: &TapSet,
    s: &ComplexVec,
    trials: usize,
    workers: usize,
    rng: &RngStream,
) -> Result<DetectionReport> {
    if trials == 0 {
        return Err(Error::domain("monte_carlo_roc needs at least one trial"));
    }
    channel.validate()?;
    let x = SlotChannel::new(taps, 0.0, channel, s.len()).apply(s)?;
    if x.len() != warden.known_x.len() {
        return Err(Error::shape("warden template and signal lengths differ"));
    }
    let run = |range: std::ops::Range<usize>| -> Result<(usize, usize)> {
        let mut y = ComplexVec::zeros(x.len());
        let (mut detections, mut alarms) = (0, 0);
        for k in range {
            let mut trial = rng.fork(k as u64);
            fill_awgn(&mut y, channel.noise_variance, &mut trial);
            if warden.decide(&y)? {
                alarms += 1;
            }
            fill_awgn(&mut y, channel.noise_variance, &mut trial);
            y.add_assign(&x)?;
            if warden.decide(&y)? {
                detections += 1;
            }
        }
        Ok((detections, alarms))
    };
    let (detections, alarms) = split_trials(trials, workers, run)?;
    Ok(DetectionReport {
        pd: detections as f64 / trials as f64,
        pf: alarms as f64 / trials as f64,
        trials,
        method: DetectionMethod::MonteCarlo,
    })
}

/// Runs `work` over contiguous chunks of `0..trials` on up to `workers`
/// threads and sums the counts.
pub(crate) fn split_trials<F>(trials: usize, workers: usize, work: F) -> Result<(usize, usize)>
where
    F: Fn(std::ops::Range<usize>) -> Result<(usize, usize)> + Sync,
{
    let workers = workers.clamp(1, trials.max(1));
    if workers == 1 {
        return work(0..trials);
    }
    let chunk = trials.div_ceil(workers);
    let results: Vec<Result<(usize, usize)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let start = w * chunk;
                let end = ((w + 1) * chunk).min(trials);
                let work = &work;
                scope.spawn(move || work(start..end))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial worker panicked"))
            .collect()
    });
    results.into_iter().try_fold((0, 0), |acc, r| {
        let (a, b) = r?;
        Ok((acc.0 + a, acc.1 + b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_taps;
    use proptest::prelude::*;

    fn cv(re: &[f64], im: &[f64]) -> ComplexVec {
        ComplexVec::new(re.to_vec(), im.to_vec()).unwrap()
    }

    /// Unit single-tap channel so the effective signal equals `s`.
    fn identity_link(sigma2: f64) -> (ChannelConfig, TapSet) {
        let cfg = ChannelConfig {
            taps: 1,
            doppler_hz: 0.0,
            noise_variance: sigma2,
            ..ChannelConfig::default()
        };
        (cfg, TapSet::new(cv(&[1.0], &[0.0])).unwrap())
    }

    #[test]
    fn statistic_examples() {
        let x = cv(&[1.0, -0.5], &[2.0, 0.25]);
        assert!((lrt_statistic(&x, &x).unwrap() - 2.0 * x.energy()).abs() < 1e-15);
        assert_eq!(
            lrt_statistic(&cv(&[1.0, 0.0], &[0.0, 0.0]), &cv(&[0.0, 1.0], &[0.0, 0.0])).unwrap(),
            0.0
        );
        assert_eq!(
            lrt_statistic(&cv(&[0.0], &[1.0]), &cv(&[1.0], &[0.0])).unwrap(),
            0.0
        );
        assert!(matches!(
            lrt_statistic(&cv(&[0.0], &[1.0]), &x),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn threshold_calibration_examples() {
        let x = cv(&[0.5, 0.5], &[0.0, 0.0]);
        assert_eq!(calibrate_threshold(&x, 1.0, 0.5).unwrap(), 0.0);
        // σ² = 1, ‖x‖² = 0.5 gives a unit-variance statistic.
        let t = calibrate_threshold(&x, 1.0, 0.1).unwrap();
        assert!((t - 1.28155).abs() < 1e-4);
        assert!(calibrate_threshold(&ComplexVec::zeros(2), 1.0, 0.1).is_err());
        assert!(calibrate_threshold(&x, 1.0, 0.0).is_err());
        assert!(calibrate_threshold(&x, 0.0, 0.1).is_err());
    }

    #[test]
    fn calibrated_threshold_hits_false_alarm_target() {
        let (cfg, taps) = identity_link(1.0);
        let mut rng = RngStream::new(21, 0);
        let s = crate::numerics::sample_awgn(32, 0.1, &mut rng).unwrap();
        let warden = LrtWarden::calibrated(s.clone(), 1.0, 0.1).unwrap();
        let report = monte_carlo_roc(&warden, &cfg, &taps, &s, 100_000, 1, &rng).unwrap();
        assert!((report.pf - 0.1).abs() < 0.006, "{}", report.pf);
    }

    #[test]
    fn analytic_pd_examples() {
        // σ² ln γ = ‖x‖² puts the threshold at the midpoint.
        let x = cv(&[1.0], &[0.0]);
        assert!((analytic_pd(std::f64::consts::E, &x, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let big = cv(&[30.0], &[0.0]);
        assert!(analytic_pd(2.0, &big, 1.0).unwrap() > 1.0 - 1e-12);
        assert!(analytic_pd(0.0, &x, 1.0).is_err());
        assert!(analytic_pd(1.0, &ComplexVec::zeros(1), 1.0).is_err());
    }

    #[test]
    fn analytic_pd_agrees_with_monte_carlo_at_midpoint() {
        let (cfg, taps) = identity_link(1.0);
        let x = cv(&[1.0], &[0.0]);
        let gamma = std::f64::consts::E;
        let threshold = 1.0 * gamma.ln() + x.energy();
        let warden = LrtWarden::new(x.clone(), 1.0, threshold).unwrap();
        assert!((warden.gamma() - gamma).abs() < 1e-12);
        let report =
            monte_carlo_roc(&warden, &cfg, &taps, &x, 100_000, 1, &RngStream::new(3, 3)).unwrap();
        assert!((report.pd - 0.5).abs() < 0.006, "{}", report.pd);
    }

    #[test]
    fn roc_extremes() {
        let (cfg, taps) = identity_link(1.0);
        let x = cv(&[0.3, 0.1], &[0.2, -0.4]);
        let rng = RngStream::new(1, 1);
        let always = LrtWarden::new(x.clone(), 1.0, -1e12).unwrap();
        let r = monte_carlo_roc(&always, &cfg, &taps, &x, 1_000, 1, &rng).unwrap();
        assert_eq!((r.pd, r.pf), (1.0, 1.0));
        let never = LrtWarden::new(x.clone(), 1.0, 1e12).unwrap();
        let r = monte_carlo_roc(&never, &cfg, &taps, &x, 1_000, 1, &rng).unwrap();
        assert_eq!((r.pd, r.pf), (0.0, 0.0));
        assert!(monte_carlo_roc(&never, &cfg, &taps, &x, 0, 1, &rng).is_err());
    }

    #[test]
    fn monte_carlo_matches_analytic_at_calibrated_point() {
        let cfg = ChannelConfig::default();
        let mut rng = RngStream::new(8, 0);
        let taps = sample_taps(&cfg, &mut rng).unwrap();
        let s = crate::numerics::sample_awgn(32, 0.02, &mut rng).unwrap();
        let x = SlotChannel::new(&taps, 0.0, &cfg, 32).apply(&s).unwrap();
        let warden = LrtWarden::calibrated(x, cfg.noise_variance, 0.1).unwrap();
        let expected = warden.analytic_pd().unwrap();
        let report = monte_carlo_roc(&warden, &cfg, &taps, &s, 100_000, 1, &rng).unwrap();
        assert!(
            (report.pd - expected).abs() < 0.01,
            "{} vs {expected}",
            report.pd
        );
        assert!(report.pd >= report.pf - 3.0 * report.pf_stderr());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let (cfg, taps) = identity_link(0.5);
        let x = cv(&[0.4, 0.2, -0.1], &[0.0, 0.3, 0.2]);
        let warden = LrtWarden::calibrated(x.clone(), 0.5, 0.1).unwrap();
        let rng = RngStream::new(77, 4);
        let one = monte_carlo_roc(&warden, &cfg, &taps, &x, 5_001, 1, &rng).unwrap();
        let four = monte_carlo_roc(&warden, &cfg, &taps, &x, 5_001, 4, &rng).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn lrt_roc_dominates_chance_at_every_threshold() {
        let (cfg, taps) = identity_link(1.0);
        let x = cv(&[0.5, -0.3], &[0.1, 0.4]);
        let rng = RngStream::new(5, 0);
        for t in [-2.0, -0.5, 0.0, 0.3, 1.0, 2.5] {
            let w = LrtWarden::new(x.clone(), 1.0, t).unwrap();
            let r = monte_carlo_roc(&w, &cfg, &taps, &x, 20_000, 1, &rng).unwrap();
            let se = (r.pd_stderr().powi(2) + r.pf_stderr().powi(2)).sqrt();
            assert!(r.pd >= r.pf - 3.0 * se, "t = {t}: {r:?}");
        }
    }

    proptest! {
        #[test]
        fn pd_monotone_in_energy(gamma in 1.0f64..50.0, a in 0.1f64..5.0, d in 0.01f64..5.0, sigma2 in 0.05f64..4.0) {
            let lo = analytic_pd(gamma, &cv(&[a.sqrt()], &[0.0]), sigma2).unwrap();
            let hi = analytic_pd(gamma, &cv(&[(a + d).sqrt()], &[0.0]), sigma2).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn pd_decreasing_in_gamma(g in 0.01f64..50.0, d in 0.01f64..50.0, e in 0.1f64..5.0) {
            let x = cv(&[e.sqrt()], &[0.0]);
            prop_assert!(analytic_pd(g, &x, 1.0).unwrap() >= analytic_pd(g + d, &x, 1.0).unwrap());
        }

        #[test]
        fn kl_scales_linearly(seed in any::<u64>(), sigma2 in 0.05f64..5.0) {
            let mut rng = RngStream::new(seed, 0);
            let s = crate::numerics::sample_awgn(8, 1.0, &mut rng).unwrap();
            let p = [1.0, 0.5, 0.25];
            let base = kl_covertness(&s, &p, sigma2).unwrap();
            prop_assert_eq!(kl_covertness(&s, &p, 2.0 * sigma2).unwrap(), base / 2.0);
            let doubled = kl_covertness(&s.scaled(2f64.sqrt()), &p, sigma2).unwrap();
            prop_assert!((doubled - 2.0 * base).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn kl_examples() {
        assert_eq!(
            kl_covertness(&ComplexVec::zeros(4), &[1.0; 4], 1.0).unwrap(),
            0.0
        );
        let s = cv(&[1.0, 1.0], &[0.0, 0.0]);
        assert_eq!(kl_covertness(&s, &[1.0; 4], 2.0).unwrap(), 4.0);
    }

    #[test]
    fn kl_single_unit_tap_matches_exact_and_empirical() {
        let mut rng = RngStream::new(64, 0);
        let s = crate::numerics::sample_awgn(16, 0.05, &mut rng).unwrap();
        let taps = TapSet::new(cv(&[1.0], &[0.0])).unwrap();
        let formula = kl_covertness_for(&s, &taps, 0.5, KlMode::Conditional).unwrap();
        let exact = gaussian_kl(&s, 0.5).unwrap();
        assert!((formula - exact).abs() < 1e-12);
        let estimate = empirical_kl(&s, 0.5, 100_000, &mut rng).unwrap();
        assert!(
            ((estimate - exact) / exact).abs() < 0.05,
            "{estimate} vs {exact}"
        );
    }

    #[test]
    fn ber_examples() {
        assert_eq!(analytic_ber_bpsk(0.0).unwrap(), 0.5);
        assert!((analytic_ber_bpsk(4.0).unwrap() - 0.02275).abs() < 1e-5);
        assert!(analytic_ber_bpsk(1.0).unwrap() > analytic_ber_bpsk(9.0).unwrap());
        assert!(analytic_ber_bpsk(-1.0).is_err());
    }

    #[test]
    fn analytic_ber_matches_simulated_bpsk() {
        let mut rng = RngStream::new(90, 0);
        for snr in [0.0f64, 1.0, 4.0, 9.0] {
            let bits = 1_000_000;
            // Unit-energy symbol in real AWGN of variance 1/(2·snr) per dimension
            // gives Q(√(2·snr·½))... keep it in the Q(√snr) form directly:
            // decision statistic ±√snr + N(0, 1).
            let mut errors = 0usize;
            for _ in 0..bits {
                let tx = if rng.bit() { 1.0 } else { -1.0 };
                let r = tx * snr.sqrt() + rng.standard_normal();
                if (r > 0.0) != (tx > 0.0) {
                    errors += 1;
                }
            }
            let p = analytic_ber_bpsk(snr).unwrap();
            let se = binomial_stderr(p, bits);
            let emp = errors as f64 / bits as f64;
            assert!((emp - p).abs() < 3.0 * se, "snr {snr}: {emp} vs {p}");
        }
    }
}
