//! Simulator and library for covert wireless communication against several
//! heterogeneous wardens.

pub mod adversarial;
pub mod channel;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod neuralnet;
pub mod numerics;

pub use error::{Error, Result};
