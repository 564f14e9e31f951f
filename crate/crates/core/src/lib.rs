//! Limited-feedback beamforming for planar antenna arrays.
//!
//! Channel state is quantized onto a Kronecker product of two PSK codebooks
//! (one per array axis) using fast noncoherent sequence detection, which
//! keeps the quantization cost linear in the antenna count. The crate also
//! carries a 3D multipath channel model, exhaustive reference searches, DFT
//! baseline codebooks and a Monte Carlo BER harness.
//!
//! Modules:
//! - [`array_channel`]: planar-array steering vectors and channel synthesis.
//! - [`codebook`]: PSK, Kronecker and DFT codebooks.
//! - [`quantizer`]: channel decomposition, fast detection, exhaustive oracles.
//! - [`linklevel_sim`]: QPSK link simulation and BER sweeps.
//! - [`cli`]: the `kpcfb` command-line front end.

pub mod array_channel;
pub mod cli;
pub mod codebook;
pub mod error;
pub mod linklevel_sim;
pub mod quantizer;

pub use error::{Error, Result};
