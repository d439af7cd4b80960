#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn covert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covert"))
        .args(args)
        .output()
        .expect("covert binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn files_with(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

/// Small networks and short runs so each command finishes in well under a
/// second.
pub const TINY: &str = r#"
seed = 3

[scenario]
preset = "urban"

[train]
iterations = 20

[train.architecture]
generator_hidden = [16]
discriminator_hidden = [16]
decoder_hidden = [16]

[train.snapshots]
every = 10

[eval]
ber_messages = 200

[eval.detection]
calibration = 500
cases = 50

[eval.fresh_wardens]
steps = 10
hidden = [16]

[sweep]
seeds = [0]
snr_grid_db = [0.0, 10.0]
ber_messages = 200
depths = [1, 2]
adaptive_window = 20

[sweep.adaptive]
period = 20
window = 20
total = 60
retrain_steps = 5
batch = 8
"#;

pub fn tiny_config(dir: &Path) -> PathBuf {
    let p = dir.join("tiny.toml");
    std::fs::write(&p, TINY).unwrap();
    p
}
