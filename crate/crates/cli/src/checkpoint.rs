//! Versioned parameter checkpoints.
//!
//! Layout: the line `COVERT-CKPT v1`, one line of JSON header, then every
//! parameter as a little-endian `f64` in the order generator, decoder,
//! wardens. The header carries the full layer specs so a checkpoint can be
//! rebuilt and checked without its config file.

use std::path::Path;

use covert_core::adversarial::{
    AdversarySet, Decoder, Generator, GeneratorSpec, LossMode, TrainedSystem, Warden,
};
use covert_core::channel::ChannelConfig;
use covert_core::evaluation::Scenario;
use covert_core::neuralnet::{LayerSpec, Network, Params};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAGIC: &str = "COVERT-CKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardenHeader {
    pub channel: ChannelConfig,
    pub weight: f64,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub seed: u64,
    pub config_hash: String,
    pub scenario: Scenario,
    pub loss_mode: LossMode,
    pub generator: GeneratorSpec,
    pub generator_layers: Vec<LayerSpec>,
    pub message_bits: usize,
    pub decoder_layers: Vec<LayerSpec>,
    pub wardens: Vec<WardenHeader>,
}

impl Header {
    fn param_count(&self) -> usize {
        let count = |l: &[LayerSpec]| l.iter().map(LayerSpec::param_count).sum::<usize>();
        count(&self.generator_layers)
            + count(&self.decoder_layers)
            + self.wardens.iter().map(|w| count(&w.layers)).sum::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: Header,
    pub system: TrainedSystem,
}

impl Checkpoint {
    pub fn new(system: TrainedSystem, scenario: &Scenario, seed: u64, config_hash: &str) -> Self {
        let header = Header {
            seed,
            config_hash: config_hash.to_string(),
            scenario: scenario.clone(),
            loss_mode: system.adversaries.mode(),
            generator: system.generator.spec().clone(),
            generator_layers: system.generator.network().specs().to_vec(),
            message_bits: system.generator.spec().message_bits,
            decoder_layers: system.decoder.network().specs().to_vec(),
            wardens: system
                .adversaries
                .wardens()
                .iter()
                .map(|w| WardenHeader {
                    channel: w.channel.clone(),
                    weight: w.weight,
                    layers: w.net.specs().to_vec(),
                })
                .collect(),
        };
        Self { header, system }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{MAGIC} v{VERSION}\n").into_bytes();
        out.extend(serde_json::to_vec(&self.header).expect("checkpoint headers serialize"));
        out.push(b'\n');
        let nets = std::iter::once(self.system.generator.network())
            .chain(std::iter::once(self.system.decoder.network()))
            .chain(self.system.adversaries.wardens().iter().map(|w| &w.net));
        for net in nets {
            for v in net.params().to_flat() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let bad = |why: &str| CliError::Validation(format!("checkpoint: {why}"));
        let (first, rest) = split_line(bytes).ok_or_else(|| bad("missing version line"))?;
        let first = std::str::from_utf8(first).map_err(|_| bad("not a checkpoint file"))?;
        let version = first
            .strip_prefix(MAGIC)
            .and_then(|v| v.trim().strip_prefix('v'))
            .ok_or_else(|| bad("not a checkpoint file"))?;
        if version != VERSION.to_string() {
            return Err(bad(&format!(
                "unsupported format version {version}; this build reads v{VERSION}"
            )));
        }
        let (json, payload) = split_line(rest).ok_or_else(|| bad("truncated header"))?;
        let header: Header =
            serde_json::from_slice(json).map_err(|e| bad(&format!("header: {e}")))?;
        let expected = header.param_count();
        if payload.len() != 8 * expected {
            return Err(bad(&format!(
                "payload holds {} bytes, layer specs need {}",
                payload.len(),
                8 * expected
            )));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let system = build_system(&header, &values)?;
        Ok(Self { header, system })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io("cannot write", path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| {
            CliError::Usage(format!("cannot read checkpoint {}: {e}", path.display()))
        })?;
        Self::from_bytes(&bytes)
    }

    /// Fails unless the networks fit `scenario`'s slot length and budget.
    pub fn check_compatible(&self, scenario: &Scenario) -> CliResult<()> {
        let g = &self.header.generator;
        let incompatible = |what: String| {
            CliError::Validation(format!("checkpoint incompatible with scenario: {what}"))
        };
        if g.slot_len != scenario.slot_len {
            return Err(incompatible(format!(
                "generator emits {} samples per slot, scenario uses {}",
                g.slot_len, scenario.slot_len
            )));
        }
        let rel = (g.power - scenario.power).abs() / scenario.power;
        if rel > 1e-12 {
            return Err(incompatible(format!(
                "generator budget {} mW, scenario budget {} mW",
                g.power, scenario.power
            )));
        }
        Ok(())
    }
}

fn split_line(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let i = bytes.iter().position(|&b| b == b'\n')?;
    Some((&bytes[..i], &bytes[i + 1..]))
}

fn build_system(h: &Header, values: &[f64]) -> CliResult<TrainedSystem> {
    let invalid = |e: covert_core::Error| CliError::Validation(format!("checkpoint: {e}"));
    let mut offset = 0;
    let mut take = |layers: &[LayerSpec]| -> CliResult<Network> {
        let n: usize = layers.iter().map(LayerSpec::param_count).sum();
        let params = Params::from_flat(layers, &values[offset..offset + n]).map_err(invalid)?;
        offset += n;
        Network::new(layers.to_vec(), params).map_err(invalid)
    };
    let generator = Generator::from_network(h.generator.clone(), take(&h.generator_layers)?)
        .map_err(invalid)?;
    let decoder = Decoder::from_network(
        h.generator.slot_len,
        h.message_bits,
        take(&h.decoder_layers)?,
    )
    .map_err(invalid)?;
    let wardens = h
        .wardens
        .iter()
        .map(|w| {
            Ok(Warden {
                net: take(&w.layers)?,
                channel: w.channel.clone(),
                weight: w.weight,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let adversaries = AdversarySet::from_parts(wardens, h.loss_mode).map_err(invalid)?;
    Ok(TrainedSystem {
        generator,
        adversaries,
        decoder,
    })
}
