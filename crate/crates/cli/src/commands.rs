use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use covert_core::adversarial::{IterationRecord, Snapshot, Trainer};
use covert_core::evaluation::{
    evaluate, match_noise_injection, mean_and_stderr, parallel_map, run_sweeps,
    single_discriminator_baseline, Experiment, MetricsReport, NoiseInjection, Preset, Row,
    Scenario, SweepKind,
};
use covert_core::numerics::RngStream;
use serde::Serialize;

use crate::artifacts::{create_dir, file_name, read_rows, write_rows, JsonLines, Manifest};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "covert",
    version,
    about = "Covert communication against several wardens"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a transmitter, decoder and discriminators.
    Train(CommonArgs),
    /// Evaluate a checkpoint with fresh and genie wardens.
    Eval {
        checkpoint: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run one or more named sweeps ("all" for every sweep).
    Sweep {
        #[arg(required = true)]
        names: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate a baseline transmitter.
    Baseline {
        method: BaselineMethod,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Merge result tables into one summary.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    NoiseInjection,
    SingleDisc,
}

impl BaselineMethod {
    fn name(self) -> &'static str {
        match self {
            BaselineMethod::NoiseInjection => "noise-injection",
            BaselineMethod::SingleDisc => "single-disc",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated seeds or a half-open range such as `0..5`.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<SeedList>,
    /// Preset name: urban, military or 6g-dense.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Test signals per detection measurement.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

pub fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let bad = || format!("invalid seed list {s:?}; use 0,1,2 or 0..3");
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        (a..b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(SeedList(seeds))
}

/// Config after applying command-line overrides.
struct Resolved {
    cfg: RunConfig,
    scenario: Scenario,
    seeds: Vec<u64>,
    workers: usize,
}

fn resolve(args: &CommonArgs) -> CliResult<Resolved> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &args.scenario {
        let preset: Preset = name
            .parse()
            .map_err(|e: covert_core::Error| CliError::Usage(e.to_string()))?;
        cfg.scenario.preset = preset;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let seeds = args.seeds.clone().map_or_else(|| vec![cfg.seed], |s| s.0);
    cfg.seed = seeds[0];
    if let Some(n) = args.trials {
        apply_trials(&mut cfg, n);
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        cfg.sweep.workers = w;
    }
    let scenario = cfg.validate()?;
    Ok(Resolved {
        workers: cfg.sweep.workers,
        cfg,
        scenario,
        seeds,
    })
}

/// Sizes every detection and BER measurement to `n` test signals.
fn apply_trials(cfg: &mut RunConfig, n: usize) {
    let det = &mut cfg.eval.detection;
    det.signals_per_case = det.signals_per_case.min(n.max(1));
    det.cases = (n / det.signals_per_case).max(1);
    det.calibration = n.max(1);
    cfg.eval.ber_messages = n.max(1);
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Eval { checkpoint, common } => cmd_eval(&checkpoint, &common),
        Command::Sweep { names, common } => cmd_sweep(&names, &common),
        Command::Baseline { method, common } => cmd_baseline(method, &common),
        Command::Report { inputs, out } => cmd_report(&inputs, &out),
    }
}

#[derive(Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
enum LogLine<'a> {
    Start {
        seed: u64,
        config_hash: &'a str,
        iterations: usize,
    },
    Initial(&'a Snapshot),
    Iteration(&'a IterationRecord),
    Done {
        iterations: usize,
    },
}

fn stem(cfg: &RunConfig, prefix: &str, seed: u64) -> String {
    format!("{prefix}-{}-s{seed}", cfg.hash())
}

fn cmd_train(args: &CommonArgs) -> CliResult<()> {
    let r = resolve(args)?;
    create_dir(&args.out)?;
    let config_path = args.out.join(format!("train-{}.config.toml", r.cfg.hash()));
    r.cfg.save(&config_path)?;
    parallel_map(&r.seeds, r.workers, |&seed| {
        train_one(&r, seed, &args.out, &config_path)
    })?;
    Ok(())
}

fn train_one(r: &Resolved, seed: u64, out: &Path, config_path: &Path) -> CliResult<()> {
    let cfg = RunConfig {
        seed,
        ..r.cfg.clone()
    };
    let hash = cfg.hash();
    let base = stem(&cfg, "train", seed);
    let log_path = out.join(format!("{base}.log.jsonl"));
    let ckpt_path = out.join(format!("{base}.ckpt"));
    let mut log = JsonLines::create(&log_path)?;
    log.write(&LogLine::Start {
        seed,
        config_hash: &hash,
        iterations: cfg.train.iterations,
    })?;
    let mut trainer = Trainer::new(&cfg.train, &r.scenario, seed)?;
    log.write(&LogLine::Initial(&trainer.log().initial))?;
    while !trainer.is_done() {
        let record = trainer.step()?;
        log.write(&LogLine::Iteration(record))?;
    }
    log.write(&LogLine::Done {
        iterations: trainer.iteration(),
    })?;
    log.finish()?;
    let (system, train_log) = trainer.finish();
    Checkpoint::new(system, &r.scenario, seed, &hash).save(&ckpt_path)?;
    let mut manifest = Manifest::new("train", &cfg, &r.scenario);
    manifest.inputs = vec![file_name(config_path)];
    manifest.outputs = vec![file_name(&ckpt_path), file_name(&log_path)];
    manifest.write(&out.join(format!("{base}.manifest.json")))?;
    let last = train_log.final_snapshot();
    eprintln!(
        "seed {seed}: {} iterations, csr {:.3}, ber {:.4}",
        cfg.train.iterations, last.csr, last.ber
    );
    Ok(())
}

/// Rows of a report plus its trial count and precision flag.
fn report_rows(rep: &MetricsReport) -> Vec<Row> {
    let mut rows = rep.rows();
    let extra = |metric: &str, value: f64| Row {
        method: rep.method.clone(),
        scenario: rep.scenario.clone(),
        k: rep.k(),
        metric: metric.into(),
        value,
        stderr: f64::NAN,
        seed: Some(rep.seed),
    };
    rows.push(extra("trials", rep.learned.trials as f64));
    rows.push(extra(
        "low_precision",
        if rep.learned.low_precision { 1.0 } else { 0.0 },
    ));
    rows
}

fn cmd_eval(path: &Path, args: &CommonArgs) -> CliResult<()> {
    let ckpt = Checkpoint::load(path)?;
    let mut r = resolve(args)?;
    if args.config.is_none() && args.scenario.is_none() {
        r.scenario = ckpt.header.scenario.clone();
    }
    if args.seed.is_none() && args.seeds.is_none() {
        r.seeds = vec![ckpt.header.seed];
        r.cfg.seed = ckpt.header.seed;
    }
    ckpt.check_compatible(&r.scenario)?;
    create_dir(&args.out)?;
    let sys = &ckpt.system;
    let reports = parallel_map(&r.seeds, r.workers, |&seed| {
        evaluate(
            "proposed",
            &sys.generator,
            &sys.decoder,
            &r.scenario,
            &r.cfg.eval,
            seed,
        )
    })?;
    let rows: Vec<Row> = reports.iter().flat_map(report_rows).collect();
    let base = format!(
        "eval-{}-{}-s{}",
        ckpt.header.config_hash,
        r.scenario.preset.name(),
        r.seeds[0]
    );
    let csv_path = args.out.join(format!("{base}.csv"));
    write_rows(&csv_path, &rows)?;
    let mut manifest = Manifest::new("eval", &r.cfg, &r.scenario);
    manifest.seeds = r.seeds.clone();
    manifest.workers = r.workers;
    manifest.inputs = vec![path.display().to_string()];
    manifest.outputs = vec![file_name(&csv_path)];
    manifest.write(&args.out.join(format!("{base}.manifest.json")))?;
    for rep in &reports {
        eprintln!(
            "seed {}: mean pd {:.3} (genie {:.3}), csr {:.3}, ber {:.4}{}",
            rep.seed,
            rep.learned.mean_pd(),
            rep.genie.mean_pd(),
            rep.learned.csr,
            rep.ber.ber,
            if rep.learned.low_precision {
                ", low precision"
            } else {
                ""
            }
        );
    }
    Ok(())
}

fn sweep_kinds(names: &[String]) -> CliResult<Vec<SweepKind>> {
    if names.iter().any(|n| n == "all") {
        return Ok(SweepKind::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| {
            n.parse::<SweepKind>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

#[derive(Serialize)]
struct TracePoint {
    seed: u64,
    iteration: usize,
    covertness_metric: f64,
    retrained: bool,
}

fn cmd_sweep(names: &[String], args: &CommonArgs) -> CliResult<()> {
    let kinds = sweep_kinds(names)?;
    let mut r = resolve(args)?;
    if args.seeds.is_some() || args.seed.is_some() {
        r.cfg.sweep.seeds = r.seeds.clone();
    }
    r.cfg.validate()?;
    create_dir(&args.out)?;
    let exp = Experiment {
        scenario: r.scenario.clone(),
        train: r.cfg.train.clone(),
        eval: r.cfg.eval.clone(),
    };
    let hash = r.cfg.hash();
    for kind in kinds {
        let table = run_sweeps(kind, &exp, &r.cfg.sweep)?;
        let base = format!("sweep-{}-{hash}", kind.name());
        let csv_path = args.out.join(format!("{base}.csv"));
        write_rows(&csv_path, &table.rows)?;
        let mut outputs = vec![file_name(&csv_path)];
        if !table.traces.is_empty() {
            let trace_path = args.out.join(format!("{base}.trace.csv"));
            let mut w = csv::Writer::from_path(&trace_path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", trace_path.display())))?;
            for (seed, trace) in &table.traces {
                for (i, &m) in trace.metric.iter().enumerate() {
                    let iteration = i + 1;
                    w.serialize(TracePoint {
                        seed: *seed,
                        iteration,
                        covertness_metric: m,
                        retrained: trace.retrained_at.contains(&iteration),
                    })
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", trace_path.display())))?;
                }
            }
            w.flush()
                .map_err(|e| CliError::io("cannot write", &trace_path, e))?;
            outputs.push(file_name(&trace_path));
        }
        let mut manifest = Manifest::new("sweep", &r.cfg, &r.scenario);
        manifest.seeds = r.cfg.sweep.seeds.clone();
        manifest.workers = r.cfg.sweep.workers;
        manifest.inputs = vec![kind.name().to_string()];
        manifest.outputs = outputs;
        manifest.write(&args.out.join(format!("{base}.manifest.json")))?;
        eprintln!(
            "{}: {} rows ({} summary)",
            kind.name(),
            table.rows.len(),
            table.summary().count()
        );
    }
    Ok(())
}

fn cmd_baseline(method: BaselineMethod, args: &CommonArgs) -> CliResult<()> {
    let r = resolve(args)?;
    create_dir(&args.out)?;
    let bits = r.cfg.train.architecture.message_bits;
    let reports = parallel_map(&r.seeds, r.workers, |&seed| match method {
        BaselineMethod::NoiseInjection => {
            let ni = match r.cfg.baseline.target_ber {
                Some(target) => {
                    match_noise_injection(
                        target,
                        &r.scenario,
                        bits,
                        r.cfg.eval.ber_messages,
                        &RngStream::new(seed, 0xB45E),
                    )?
                    .0
                }
                None => NoiseInjection::new(r.cfg.baseline.alpha, &r.scenario, bits)?,
            };
            evaluate(method.name(), &ni, &ni, &r.scenario, &r.cfg.eval, seed)
        }
        BaselineMethod::SingleDisc => {
            let mut train = r.cfg.train.clone();
            train.snapshots.every = 0;
            let (sys, _) = single_discriminator_baseline(&train, &r.scenario, seed)?;
            evaluate(
                method.name(),
                &sys.generator,
                &sys.decoder,
                &r.scenario,
                &r.cfg.eval,
                seed,
            )
        }
    })?;
    let rows: Vec<Row> = reports.iter().flat_map(report_rows).collect();
    let base = format!(
        "baseline-{}-{}-s{}",
        method.name(),
        r.cfg.hash(),
        r.seeds[0]
    );
    let csv_path = args.out.join(format!("{base}.csv"));
    write_rows(&csv_path, &rows)?;
    let mut manifest = Manifest::new("baseline", &r.cfg, &r.scenario);
    manifest.seeds = r.seeds.clone();
    manifest.workers = r.workers;
    manifest.inputs = vec![method.name().to_string()];
    manifest.outputs = vec![file_name(&csv_path)];
    manifest.write(&args.out.join(format!("{base}.manifest.json")))?;
    for rep in &reports {
        eprintln!(
            "{} seed {}: mean pd {:.3}, csr {:.3}, ber {:.4}",
            rep.method,
            rep.seed,
            rep.learned.mean_pd(),
            rep.learned.csr,
            rep.ber.ber
        );
    }
    Ok(())
}

/// Metrics shown as columns of the comparison table.
pub const TABLE_METRICS: [&str; 6] = [
    "mean_pd",
    "mean_pf",
    "csr",
    "genie_mean_pd",
    "genie_csr",
    "ber",
];

fn csv_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|x| x == "csv")
                        && !f.to_string_lossy().ends_with(".trace.csv")
                        && !file_name(f).starts_with("report")
                })
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(CliError::Usage(format!("no such input {}", p.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::Usage("no result tables among the inputs".into()));
    }
    Ok(files)
}

/// Means and standard errors over seeds for every
/// `(method, scenario, K, metric)`; inputs that only carry summary rows pass
/// through unchanged.
pub fn summarize(rows: &[Row]) -> Vec<Row> {
    let mut keys: Vec<(String, String, usize, String)> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.scenario.clone(), r.k, r.metric.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, scenario, k, metric)| {
            let group: Vec<&Row> = rows
                .iter()
                .filter(|r| {
                    r.method == method && r.scenario == scenario && r.k == k && r.metric == metric
                })
                .collect();
            let seeded: Vec<f64> = group
                .iter()
                .filter(|r| r.seed.is_some())
                .map(|r| r.value)
                .collect();
            let (value, stderr) = if seeded.is_empty() {
                (group[0].value, group[0].stderr)
            } else if seeded.len() == 1 {
                let r = group
                    .iter()
                    .find(|r| r.seed.is_some())
                    .expect("one seeded row");
                (r.value, r.stderr)
            } else {
                mean_and_stderr(&seeded)
            };
            Row {
                method,
                scenario,
                k,
                metric,
                value,
                stderr,
                seed: None,
            }
        })
        .collect()
}

fn cmd_report(inputs: &[PathBuf], out: &Path) -> CliResult<()> {
    let files = csv_inputs(inputs)?;
    let mut rows = Vec::new();
    for f in &files {
        rows.extend(read_rows(f)?);
    }
    let summary = summarize(&rows);
    create_dir(out)?;
    let long_path = out.join("report.csv");
    write_rows(&long_path, &summary)?;

    let table_path = out.join("report-table.csv");
    let mut w = csv::Writer::from_path(&table_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", table_path.display())))?;
    let mut header = vec!["method".to_string(), "scenario".into(), "K".into()];
    for m in TABLE_METRICS {
        header.push(m.into());
        header.push(format!("{m}_stderr"));
    }
    let io = |e: csv::Error| CliError::Runtime(format!("{}: {e}", table_path.display()));
    w.write_record(&header).map_err(io)?;
    let mut groups: Vec<(String, String, usize)> = Vec::new();
    for r in &summary {
        let g = (r.method.clone(), r.scenario.clone(), r.k);
        if TABLE_METRICS.contains(&r.metric.as_str()) && !groups.contains(&g) {
            groups.push(g);
        }
    }
    for (method, scenario, k) in &groups {
        let mut rec = vec![method.clone(), scenario.clone(), k.to_string()];
        for m in TABLE_METRICS {
            match summary.iter().find(|r| {
                &r.method == method && &r.scenario == scenario && r.k == *k && r.metric == m
            }) {
                Some(r) => {
                    rec.push(r.value.to_string());
                    rec.push(r.stderr.to_string());
                }
                None => rec.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&rec).map_err(io)?;
        println!("{}", rec.join(","));
    }
    w.flush()
        .map_err(|e| CliError::io("cannot write", &table_path, e))?;

    #[derive(Serialize)]
    struct ReportManifest {
        tool: &'static str,
        version: &'static str,
        command: &'static str,
        inputs: Vec<String>,
        outputs: Vec<String>,
    }
    let manifest = ReportManifest {
        tool: "covert",
        version: env!("CARGO_PKG_VERSION"),
        command: "report",
        inputs: files.iter().map(|f| f.display().to_string()).collect(),
        outputs: vec![file_name(&long_path), file_name(&table_path)],
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifests serialize") + "\n";
    let path = out.join("report.manifest.json");
    std::fs::write(&path, text).map_err(|e| CliError::io("cannot write", &path, e))
}
