//! Behavioral-biometric verification of talking-head clips from facial
//! landmark motion.
//!
//! Per-frame landmark graphs are encoded by a three-layer graph convolutional
//! network, pooled over time with learned attention, trained with a triplet
//! loss keyed on driver identity, and evaluated with a genuine/impostor
//! comparison protocol.

pub mod bench;
pub mod checkpoint;
#[cfg(feature = "cli")]
pub mod cli;
pub mod clips;
pub mod dataset;
pub mod error;
pub mod kv;
pub mod landmarks;
pub mod mesh;
pub mod model;
pub mod par;
pub mod rng;
pub mod synth;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
