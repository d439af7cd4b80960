//! Acceptance gate: one pass/fail line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL but do not fail
//! the run; if one of them starts passing the run fails so the list stays
//! current.

use std::time::{Duration, Instant};

use covert_core::adversarial::{
    adaptive_warden_loop, discriminator_loss, generator_loss, propagate_rows, random_messages,
    AdaptiveConfig, AdversarySet, Architecture, Batch, Decoder, Generator, GeneratorLossSettings,
    GeneratorSpec, LossMode, TrainConfig, TrainLog, TrainedSystem, Trainer,
};
use covert_core::channel::{ChannelConfig, TapSampler, TapSet};
use covert_core::detection::{
    analytic_pd, empirical_kl, gaussian_kl, kl_covertness, monte_carlo_roc, LrtWarden,
};
use covert_core::evaluation::{
    best_improvement_window, evaluate, match_noise_injection, measure_ber_curve, parallel_map,
    single_discriminator_baseline, spearman, ChannelBank, EvalConfig, MetricsReport, Preset,
    Scenario, Transmitter,
};
use covert_core::neuralnet::{mlp, Activation, AdamConfig, AdamState, Mode, Network};
use covert_core::numerics::{ComplexVec, RngStream};
use ndarray::Array2;

const KNOWN_FAILURES: &[u32] = &[9];

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const PD_SE_MULTIPLE: f64 = 3.0;
const PF_TOLERANCE: f64 = 0.006;
const KL_TOLERANCE: f64 = 0.05;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_REL_FLOOR: f64 = 1e-6;
const GRAD_PROBES: usize = 60;
const TOY_MSE_TOL: f64 = 0.01;
const POWER_SLACK: f64 = 1e-9;
const BER_TARGET: f64 = 0.05;
const CSR_GAIN: f64 = 0.30;
const SPEARMAN_MAX: f64 = -0.9;
const DETERMINISM_TOL: f64 = 1e-9;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn timed(
    id: u32,
    name: &'static str,
    budget_secs: u64,
    f: impl FnOnce() -> (bool, String),
) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    let elapsed = start.elapsed();
    let in_budget = within(elapsed, budget_secs);
    Outcome {
        id,
        name,
        pass: pass && in_budget,
        detail: if in_budget {
            detail
        } else {
            format!("{detail}; over {budget_secs}s budget")
        },
        elapsed,
    }
}

fn unit_tap() -> (ChannelConfig, TapSet) {
    let cfg = ChannelConfig {
        taps: 1,
        doppler_hz: 0.0,
        ..ChannelConfig::default()
    };
    (
        cfg,
        TapSet::new(ComplexVec::new(vec![1.0], vec![0.0]).unwrap()).unwrap(),
    )
}

fn scaled_signal(n: usize, energy: f64, rng: &mut RngStream) -> ComplexVec {
    let re: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let im: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let v = ComplexVec::new(re, im).unwrap();
    v.scaled((energy / v.energy()).sqrt())
}

fn criterion_1() -> (bool, String) {
    let mut rng = RngStream::new(101, 0);
    // (γ, ‖x‖², σ²); the first point has P_D = 1/2.
    let points = [
        (2f64.exp(), 2.0, 1.0),
        (1.0, 1.0, 1.0),
        (3.0, 4.0, 2.0),
        (0.5, 0.5, 0.25),
        (10.0, 8.0, 4.0),
    ];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (i, &(gamma, energy, sigma2)) in points.iter().enumerate() {
        let (mut cfg, taps) = unit_tap();
        cfg.noise_variance = sigma2;
        let x = scaled_signal(16, energy, &mut rng);
        let analytic = analytic_pd(gamma, &x, sigma2).unwrap();
        if i == 0 {
            ok &= (analytic - 0.5).abs() < 1e-12;
        }
        let warden = LrtWarden::new(x.clone(), sigma2, sigma2 * gamma.ln() + energy).unwrap();
        let mc = monte_carlo_roc(
            &warden,
            &cfg,
            &taps,
            &x,
            100_000,
            1,
            &RngStream::new(102, i as u64),
        )
        .unwrap();
        let z = (mc.pd - analytic).abs() / mc.pd_stderr().max(1e-12);
        worst = worst.max(z);
        ok &= z <= PD_SE_MULTIPLE;
    }
    (
        ok,
        format!("5 points, worst |MC − analytic| = {worst:.2} SE (limit {PD_SE_MULTIPLE})"),
    )
}

fn criterion_2() -> (bool, String) {
    let mut rng = RngStream::new(201, 0);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for preset in Preset::NAMED {
        let sc = Scenario::preset(preset).unwrap();
        for (i, link) in sc.wardens.iter().enumerate() {
            let taps = TapSampler::new(link).unwrap().sample(&mut rng);
            let s = scaled_signal(sc.slot_len, sc.power, &mut rng);
            let x = covert_core::channel::SlotChannel::new(&taps, 0.0, link, sc.slot_len)
                .apply(&s)
                .unwrap();
            let warden = LrtWarden::calibrated(x, link.noise_variance, 0.1).unwrap();
            let mc = monte_carlo_roc(
                &warden,
                link,
                &taps,
                &s,
                100_000,
                1,
                &RngStream::new(202, (count * 7 + i) as u64),
            )
            .unwrap();
            worst = worst.max((mc.pf - 0.1).abs());
            count += 1;
        }
    }
    (
        worst <= PF_TOLERANCE,
        format!(
            "{count} wardens over 3 presets, worst |P_F − 0.1| = {worst:.4} (limit {PF_TOLERANCE})"
        ),
    )
}

fn criterion_3() -> (bool, String) {
    let mut rng = RngStream::new(301, 0);
    let s = scaled_signal(32, 3.0, &mut rng);
    let sigma2 = 1.5;
    let budget = kl_covertness(&s, &[1.0], sigma2).unwrap();
    let exact = gaussian_kl(&s, sigma2).unwrap();
    let plug_in = empirical_kl(&s, sigma2, 100_000, &mut rng).unwrap();
    let rel = (plug_in - exact).abs() / exact;
    let ok = (budget - exact).abs() < 1e-12 && rel < KL_TOLERANCE;
    (ok, format!("budget {budget:.6} exact {exact:.6} plug-in {plug_in:.6} (rel {rel:.4}, limit {KL_TOLERANCE})"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_REL_FLOOR)
}

fn probes(len: usize, rng: &mut RngStream) -> Vec<usize> {
    (0..GRAD_PROBES)
        .map(|_| ((rng.uniform() * len as f64) as usize).min(len - 1))
        .collect()
}

fn central_difference(f: impl Fn(f64) -> f64, v: f64) -> f64 {
    let h = 1e-6;
    (f(v + h) - f(v - h)) / (2.0 * h)
}

fn criterion_4() -> (bool, String) {
    let sc = Scenario::urban();
    let arch = Architecture::desk();
    let mut rng = RngStream::new(401, 0);
    let gen = Generator::new(GeneratorSpec::new(&arch, &sc), &mut rng).unwrap();
    let adv = AdversarySet::new(
        &sc,
        &arch.discriminator_hidden,
        LossMode::Standard,
        &mut rng,
    )
    .unwrap();
    let dec = Decoder::new(
        sc.slot_len,
        arch.message_bits,
        &arch.decoder_hidden,
        &mut rng,
    )
    .unwrap();
    let batch = Batch::sample(gen.spec(), &ChannelBank::new(&sc).unwrap(), 4, &mut rng).unwrap();
    let settings = GeneratorLossSettings::default();
    let loss = |g: &Generator, d: &Decoder| {
        generator_loss(
            g,
            &adv,
            d,
            &batch,
            settings,
            Mode::Eval,
            &mut RngStream::new(0, 0),
        )
        .unwrap()
    };
    let base = loss(&gen, &dec);

    let mut worst = [0.0f64; 3];
    for i in probes(base.generator_grad.len(), &mut rng) {
        let v = gen.network().params().get(i).unwrap();
        let fd = central_difference(
            |p| {
                let mut g = gen.clone();
                g.network_mut().params_mut().set(i, p).unwrap();
                loss(&g, &dec).value
            },
            v,
        );
        worst[0] = worst[0].max(rel_err(base.generator_grad.get(i).unwrap(), fd));
    }
    for i in probes(base.decoder_grad.len(), &mut rng) {
        let v = dec.network().params().get(i).unwrap();
        let fd = central_difference(
            |p| {
                let mut d = dec.clone();
                d.network_mut().params_mut().set(i, p).unwrap();
                loss(&gen, &d).value
            },
            v,
        );
        worst[1] = worst[1].max(rel_err(base.decoder_grad.get(i).unwrap(), fd));
    }
    let d0 = &adv.wardens()[0].net;
    let signals = gen.transmit_batch(batch.messages.view(), &mut rng).unwrap();
    let y = propagate_rows(
        &batch.wardens[0].channels,
        signals.view(),
        Some(batch.wardens[0].noise_h1.view()),
    )
    .unwrap();
    let n = &batch.wardens[0].noise_h0;
    let obj = discriminator_loss(d0, n.view(), y.view()).unwrap();
    for i in probes(d0.param_count(), &mut rng) {
        let v = d0.params().get(i).unwrap();
        let fd = -central_difference(
            |p| {
                let mut d = d0.clone();
                d.params_mut().set(i, p).unwrap();
                discriminator_loss(&d, n.view(), y.view()).unwrap().value
            },
            v,
        );
        worst[2] = worst[2].max(rel_err(obj.descent_grad.get(i).unwrap(), fd));
    }
    let ok = worst.iter().all(|&w| w < GRAD_REL_TOL);
    (
        ok,
        format!(
            "{GRAD_PROBES} params each, max rel err generator {:.1e} decoder {:.1e} discriminator {:.1e} (limit {GRAD_REL_TOL:.0e})",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_5() -> (bool, String) {
    let mu = 1.5;
    let mut rng = RngStream::new(501, 0);
    let mut d = Network::init(
        mlp(
            1,
            &[32, 32],
            1,
            Activation::LeakyRelu,
            Activation::Sigmoid,
            0.0,
        ),
        &mut rng,
    )
    .unwrap();
    let mut adam = AdamState::new(
        d.params(),
        AdamConfig {
            lr: 1e-3,
            ..AdamConfig::default()
        },
    );
    let draw = |rows: usize, shift: f64, rng: &mut RngStream| {
        Array2::from_shape_fn((rows, 1), |_| shift + rng.standard_normal())
    };
    for _ in 0..4000 {
        let h0 = draw(128, 0.0, &mut rng);
        let h1 = draw(128, mu, &mut rng);
        let obj = discriminator_loss(&d, h0.view(), h1.view()).unwrap();
        adam.update(&mut d, &obj.descent_grad).unwrap();
    }
    let optimal = |y: f64| {
        let p0 = (-0.5 * y * y).exp();
        let p1 = (-0.5 * (y - mu).powi(2)).exp();
        p0 / (p0 + p1)
    };
    let test = Array2::from_shape_fn(
        (20_000, 1),
        |(r, _)| if r % 2 == 0 { 0.0 } else { mu } + rng.standard_normal(),
    );
    let out = d.predict(test.view()).unwrap();
    let mse = test
        .iter()
        .zip(out.iter())
        .map(|(&y, &p)| (p - optimal(y)).powi(2))
        .sum::<f64>()
        / 20_000.0;
    (
        mse < TOY_MSE_TOL,
        format!("N(0,1) vs N({mu},1), MSE to D* = {mse:.5} (limit {TOY_MSE_TOL})"),
    )
}

fn criterion_6() -> (bool, String) {
    let sc = Scenario::urban();
    let cfg = TrainConfig {
        iterations: 200,
        snapshots: covert_core::adversarial::SnapshotConfig {
            every: 0,
            ..Default::default()
        },
        ..TrainConfig::desk()
    };
    let mut trainer = Trainer::new(&cfg, &sc, 601).unwrap();
    let mut rng = RngStream::new(602, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for stage in [0, 50, 200] {
        while trainer.iteration() < stage {
            trainer.step().unwrap();
        }
        let gen = &trainer.system().generator;
        let m = random_messages(10_000, gen.spec().message_bits, &mut rng);
        let eval = gen.transmit_batch(m.view(), &mut rng).unwrap();
        let z = Array2::from_shape_fn((10_000, gen.spec().noise_dim), |_| rng.standard_normal());
        let input = gen.input_batch(m.view(), z.view()).unwrap();
        let train = gen
            .forward(input.view(), Mode::Train, &mut rng)
            .unwrap()
            .signals;
        for s in [eval, train] {
            for row in s.rows() {
                worst = worst.max(row.dot(&row) - sc.power);
                checked += 1;
            }
        }
    }
    (
        worst <= POWER_SLACK,
        format!("{checked} signals at iterations 0/50/200, max energy − P = {worst:.2e} (limit {POWER_SLACK:.0e})"),
    )
}

/// Everything criteria 7–11 report for one full run.
struct Benchmark {
    proposed: Vec<MetricsReport>,
    injected: Vec<MetricsReport>,
    logs: Vec<TrainLog>,
    military_multi: Vec<MetricsReport>,
    military_single: Vec<MetricsReport>,
    ber_curve: Vec<(f64, f64)>,
    adaptive: Vec<f64>,
    minutes: [f64; 4],
}

impl Benchmark {
    fn numbers(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let report = |v: &mut Vec<f64>, r: &MetricsReport| {
            for det in [&r.learned, &r.genie] {
                for w in &det.wardens {
                    v.extend([w.pd, w.pf]);
                    v.extend(&w.case_pd);
                }
                v.push(det.csr);
            }
            v.push(r.ber.ber);
        };
        for r in self
            .proposed
            .iter()
            .chain(&self.injected)
            .chain(&self.military_multi)
            .chain(&self.military_single)
        {
            report(&mut v, r);
        }
        for log in &self.logs {
            for rec in &log.records {
                v.extend([
                    rec.generator_loss,
                    rec.covertness_loss,
                    rec.decode_mse,
                    rec.covertness_metric,
                ]);
                v.extend(&rec.discriminator_losses);
            }
            v.extend(log.csr_curve().iter().map(|p| p.1));
        }
        v.extend(self.ber_curve.iter().map(|p| p.1));
        v.extend(&self.adaptive);
        v
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_benchmark() -> Benchmark {
    let urban = Scenario::urban();
    let cfg = TrainConfig::desk();
    let eval = EvalConfig::default();

    let t = Instant::now();
    let urban_runs: Vec<(TrainedSystem, TrainLog, MetricsReport, MetricsReport)> =
        parallel_map(&SEEDS, workers(), |&seed| {
            let (sys, log) = covert_core::adversarial::train(&cfg, &urban, seed)?;
            let proposed = evaluate(
                "proposed",
                &sys.generator,
                &sys.decoder,
                &urban,
                &eval,
                seed,
            )?;
            let (ni, _) = match_noise_injection(
                proposed.ber.ber,
                &urban,
                cfg.architecture.message_bits,
                eval.ber_messages,
                &RngStream::new(seed, 0xB45E),
            )?;
            let injected = evaluate("noise-injection", &ni, &ni, &urban, &eval, seed)?;
            Ok::<_, covert_core::Error>((sys, log, proposed, injected))
        })
        .unwrap();
    let urban_minutes = t.elapsed().as_secs_f64() / 60.0;

    let t = Instant::now();
    let military = Scenario::military();
    let quiet = TrainConfig {
        snapshots: covert_core::adversarial::SnapshotConfig {
            every: 0,
            ..cfg.snapshots.clone()
        },
        ..cfg.clone()
    };
    let military_runs: Vec<(MetricsReport, MetricsReport)> =
        parallel_map(&SEEDS, workers(), |&seed| {
            let (multi, _) = covert_core::adversarial::train(&quiet, &military, seed)?;
            let multi = evaluate(
                "proposed",
                &multi.generator,
                &multi.decoder,
                &military,
                &eval,
                seed,
            )?;
            let (single, _) = single_discriminator_baseline(&quiet, &military, seed)?;
            let single = evaluate(
                "single-disc",
                &single.generator,
                &single.decoder,
                &military,
                &eval,
                seed,
            )?;
            Ok::<_, covert_core::Error>((multi, single))
        })
        .unwrap();
    let military_minutes = t.elapsed().as_secs_f64() / 60.0;

    let t = Instant::now();
    let sys = &urban_runs[0].0;
    let grid: Vec<f64> = (0..=10).map(|k| 2.0 * k as f64).collect();
    let ber_curve = measure_ber_curve(
        &sys.generator,
        &sys.decoder,
        &urban,
        &grid,
        1250,
        &mut RngStream::new(1001, 0),
    )
    .unwrap()
    .into_iter()
    .map(|(snr, b)| (snr, b.ber))
    .collect();
    let ber_minutes = t.elapsed().as_secs_f64() / 60.0;

    let t = Instant::now();
    let mut adversaries = sys.adversaries.clone();
    let trace = adaptive_warden_loop(
        &sys.generator,
        &mut adversaries,
        &ChannelBank::new(&urban).unwrap(),
        &AdaptiveConfig::default(),
        cfg.adam,
        &RngStream::new(1101, 0),
    )
    .unwrap();
    let adaptive_minutes = t.elapsed().as_secs_f64() / 60.0;

    let mut proposed = Vec::new();
    let mut injected = Vec::new();
    let mut logs = Vec::new();
    for (_, log, p, n) in urban_runs {
        logs.push(log);
        proposed.push(p);
        injected.push(n);
    }
    let (military_multi, military_single) = military_runs.into_iter().unzip();
    Benchmark {
        proposed,
        injected,
        logs,
        military_multi,
        military_single,
        ber_curve,
        adaptive: trace.metric,
        minutes: [
            urban_minutes,
            military_minutes,
            ber_minutes,
            adaptive_minutes,
        ],
    }
}

fn outcome(
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    minutes: f64,
    budget_min: f64,
) -> Outcome {
    let in_budget = minutes <= budget_min;
    Outcome {
        id,
        name,
        pass: pass && in_budget,
        detail: if in_budget {
            detail
        } else {
            format!("{detail}; over {budget_min} min budget")
        },
        elapsed: Duration::from_secs_f64(minutes * 60.0),
    }
}

fn fmt(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn training_criteria(b: &Benchmark) -> Vec<Outcome> {
    let bers: Vec<f64> = b.proposed.iter().map(|r| r.ber.ber).collect();
    let ber_ok = bers.iter().filter(|&&x| x <= BER_TARGET).count();
    let pd: Vec<f64> = b.proposed.iter().map(|r| r.learned.mean_pd()).collect();
    let ni_pd: Vec<f64> = b.injected.iter().map(|r| r.learned.mean_pd()).collect();
    let ordered = pd.iter().zip(&ni_pd).filter(|(a, b)| a < b).count();
    let c7 = outcome(
        7,
        "desk-scale training benchmark",
        ber_ok >= 4 && ordered >= 4,
        format!(
            "BER ≤ {BER_TARGET} on {ber_ok}/5 [{}]; mean P_D below noise injection on {ordered}/5 [{}] vs [{}]",
            fmt(&bers),
            fmt(&pd),
            fmt(&ni_pd)
        ),
        b.minutes[0],
        15.0,
    );

    let multi: Vec<f64> = b
        .military_multi
        .iter()
        .map(|r| r.learned.wardens[3].pd)
        .collect();
    let single: Vec<f64> = b
        .military_single
        .iter()
        .map(|r| r.learned.wardens[3].pd)
        .collect();
    let wins = multi.iter().zip(&single).filter(|(m, s)| m < s).count();
    let c8 = outcome(
        8,
        "heterogeneity (military σ²=0.05 warden)",
        wins >= 3,
        format!(
            "multi below single on {wins}/5: [{}] vs [{}]",
            fmt(&multi),
            fmt(&single)
        ),
        b.minutes[1],
        15.0,
    );

    let gains: Vec<f64> = b
        .logs
        .iter()
        .map(|l| {
            let c = l.csr_curve();
            c[c.len() - 1].1 - c[0].1
        })
        .collect();
    let early: Vec<bool> = b
        .logs
        .iter()
        .map(|l| {
            best_improvement_window(&l.csr_curve(), 100)
                .is_some_and(|t| 2 * t < TrainConfig::desk().iterations)
        })
        .collect();
    let good = gains
        .iter()
        .zip(&early)
        .filter(|(g, e)| **g >= CSR_GAIN && **e)
        .count();
    let c9 = outcome(
        9,
        "CSR learning curve",
        good >= 3,
        format!(
            "gain ≥ {CSR_GAIN} with early steepest window on {good}/5; gains [{}]",
            fmt(&gains)
        ),
        b.minutes[0],
        15.0,
    );

    let (x, y): (Vec<f64>, Vec<f64>) = b.ber_curve.iter().copied().unzip();
    let rho = spearman(&x, &y).unwrap();
    let c10 = outcome(
        10,
        "BER–SNR monotone trend",
        rho <= SPEARMAN_MAX,
        format!(
            "Spearman {rho:.3} over 0–20 dB (limit {SPEARMAN_MAX}); BER [{}]",
            fmt(&y)
        ),
        b.minutes[2],
        5.0,
    );

    let n = b.adaptive.len();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (first, last) = (mean(&b.adaptive[..500]), mean(&b.adaptive[n - 500..]));
    let c11 = outcome(
        11,
        "adaptive-warden degradation",
        n == 5000 && last < first,
        format!("covertness metric first 500 {first:.4}, last 500 {last:.4}"),
        b.minutes[3],
        10.0,
    );
    vec![c7, c8, c9, c10, c11]
}

fn main() {
    let mut outcomes = vec![
        timed(1, "analytic detector equivalence", 30, criterion_1),
        timed(2, "threshold calibration", 30, criterion_2),
        timed(3, "KL formula", 10, criterion_3),
        timed(4, "gradient correctness", 60, criterion_4),
        timed(5, "optimal-discriminator convergence", 120, criterion_5),
        timed(6, "power constraint", 10, criterion_6),
    ];
    for o in &outcomes {
        report(o);
    }

    let first = run_benchmark();
    let training = training_criteria(&first);
    for o in &training {
        report(o);
    }
    outcomes.extend(training);

    let start = Instant::now();
    let second = run_benchmark();
    let (a, b) = (first.numbers(), second.numbers());
    let worst = a
        .iter()
        .zip(&b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max);
    let bitwise = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    let c12 = Outcome {
        id: 12,
        name: "determinism",
        pass: a.len() == b.len() && worst <= DETERMINISM_TOL,
        detail: format!(
            "{} numbers from criteria 7–11 rerun, max |Δ| = {worst:.1e} (limit {DETERMINISM_TOL:.0e}), bitwise {bitwise}",
            a.len()
        ),
        elapsed: start.elapsed(),
    };
    report(&c12);
    outcomes.push(c12);

    let unexpected: Vec<u32> = outcomes
        .iter()
        .filter(|o| o.pass == KNOWN_FAILURES.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {passed}/{} passed; known failures {:?}; unexpected {:?}",
        outcomes.len(),
        KNOWN_FAILURES,
        unexpected
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}

fn report(o: &Outcome) {
    let status = match (o.pass, KNOWN_FAILURES.contains(&o.id)) {
        (true, _) => "PASS",
        (false, true) => "FAIL (known)",
        (false, false) => "FAIL",
    };
    println!(
        "criterion {:>2} {:<40} {status:<12} {} [{:.1}s]",
        o.id,
        o.name,
        o.detail,
        o.elapsed.as_secs_f64()
    );
}
