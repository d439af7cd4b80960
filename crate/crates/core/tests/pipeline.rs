//! End-to-end flows through the public API: train, evaluate, sweep.

use covert_core::adversarial::{train, Architecture, TrainConfig, Trainer};
use covert_core::evaluation::{
    evaluate, match_noise_injection, measure_ber, measure_detection, run_sweeps, ChannelBank,
    DetectionConfig, EvalConfig, Experiment, FreshWardenConfig, NoiseInjection, Scenario, Silent,
    SweepConfig, SweepKind, WardenModel,
};
use covert_core::numerics::RngStream;

fn tiny_train() -> TrainConfig {
    let mut cfg = TrainConfig::desk();
    cfg.iterations = 30;
    cfg.architecture = Architecture {
        generator_hidden: vec![16],
        discriminator_hidden: vec![16],
        decoder_hidden: vec![16],
        ..Architecture::desk()
    };
    cfg.snapshots.every = 10;
    cfg.snapshots.detection.calibration = 500;
    cfg.snapshots.detection.cases = 50;
    cfg.snapshots.ber_messages = 100;
    cfg
}

fn tiny_eval() -> EvalConfig {
    EvalConfig {
        detection: DetectionConfig {
            calibration: 2000,
            cases: 100,
            ..DetectionConfig::default()
        },
        fresh_wardens: FreshWardenConfig {
            steps: 20,
            hidden: vec![16],
            ..FreshWardenConfig::default()
        },
        ber_messages: 300,
    }
}

#[test]
fn stepping_a_trainer_matches_a_full_run() {
    let sc = Scenario::urban();
    let cfg = tiny_train();
    let (sys, log) = train(&cfg, &sc, 9).unwrap();
    let mut trainer = Trainer::new(&cfg, &sc, 9).unwrap();
    while !trainer.is_done() {
        trainer.step().unwrap();
    }
    let (sys2, log2) = trainer.finish();
    assert_eq!(log, log2);
    assert_eq!(
        sys.generator.network().params(),
        sys2.generator.network().params()
    );
    assert_eq!(log.records.len(), 30);
    assert_eq!(
        log.csr_curve().iter().map(|c| c.0).collect::<Vec<_>>(),
        [0, 10, 20, 30]
    );
}

#[test]
fn seeds_change_the_run() {
    let sc = Scenario::urban();
    let (a, _) = train(&tiny_train(), &sc, 1).unwrap();
    let (b, _) = train(&tiny_train(), &sc, 2).unwrap();
    assert_ne!(
        a.generator.network().params(),
        b.generator.network().params()
    );
}

#[test]
fn trained_transmitter_respects_the_budget_and_evaluates() {
    let sc = Scenario::military();
    let (sys, _) = train(&tiny_train(), &sc, 4).unwrap();
    let rep = evaluate(
        "proposed",
        &sys.generator,
        &sys.decoder,
        &sc,
        &tiny_eval(),
        4,
    )
    .unwrap();
    assert_eq!(rep.k(), 4);
    assert_eq!(rep.learned.trials, 1000);
    for w in rep.learned.wardens.iter().chain(&rep.genie.wardens) {
        assert!((0.0..=1.0).contains(&w.pd));
        assert!((0.06..=0.14).contains(&w.pf), "pf {}", w.pf);
    }
    // The genie knows the received signal and is never worse than chance.
    assert!(rep.genie.mean_pd() >= rep.genie.mean_pf());
    let rows = rep.rows();
    for m in [
        "mean_pd",
        "genie_mean_pd",
        "csr",
        "genie_csr",
        "ber",
        "pd@warden=3",
    ] {
        assert!(rows.iter().any(|r| r.metric == m), "{m}");
    }
    let mut rng = RngStream::new(0, 0);
    let msgs = covert_core::adversarial::random_messages(200, 8, &mut rng);
    let s =
        covert_core::evaluation::Transmitter::transmit_batch(&sys.generator, msgs.view(), &mut rng)
            .unwrap();
    for row in s.rows() {
        let e: f64 = row.iter().map(|v| v * v).sum();
        assert!(e <= sc.power * (1.0 + 1e-9));
    }
}

#[test]
fn silence_is_undetectable_for_every_warden_model() {
    let sc = Scenario::urban();
    let bank = ChannelBank::new(&sc).unwrap();
    let tx = Silent {
        slot_len: sc.slot_len,
        message_bits: 8,
    };
    let cfg = DetectionConfig {
        calibration: 20_000,
        cases: 1000,
        ..DetectionConfig::default()
    };
    let models = vec![WardenModel::Genie; 3];
    let det = measure_detection(&tx, &models, &bank, &cfg, &mut RngStream::new(3, 0)).unwrap();
    for w in &det.wardens {
        assert!((w.pd - 0.1).abs() < 4.0 * w.pd_stderr + 0.01, "pd {}", w.pd);
    }
}

#[test]
fn matched_noise_injection_meets_its_target() {
    let sc = Scenario::urban();
    let rng = RngStream::new(8, 0);
    let (ni, ber) = match_noise_injection(0.05, &sc, 8, 2000, &rng).unwrap();
    assert!(ber.ber <= 0.05);
    assert!(ni.alpha < 1.0);
    // Shrinking the signal share below the match breaks the target.
    let weaker = NoiseInjection::new(ni.alpha * 0.5, &sc, 8).unwrap();
    let bank = ChannelBank::new(&sc).unwrap();
    let b = measure_ber(&weaker, &weaker, &bank, 2000, &mut rng.clone()).unwrap();
    assert!(b.ber > ber.ber);
}

#[test]
fn sweeps_do_not_depend_on_the_worker_count() {
    let exp = Experiment {
        scenario: Scenario::urban(),
        train: tiny_train(),
        eval: tiny_eval(),
    };
    let cfg = SweepConfig {
        seeds: vec![0, 1, 2],
        snr_grid_db: vec![0.0, 10.0, 20.0],
        ber_messages: 200,
        ..SweepConfig::default()
    };
    let one = run_sweeps(SweepKind::BerVsSnr, &exp, &cfg).unwrap();
    let three = run_sweeps(
        SweepKind::BerVsSnr,
        &exp,
        &SweepConfig {
            workers: 3,
            ..cfg.clone()
        },
    )
    .unwrap();
    // Per-seed rank correlations carry a NaN stderr, so compare renderings.
    assert_eq!(format!("{one:?}"), format!("{three:?}"));
    assert_eq!(one.summary().count(), 2 * (3 + 1));
}
