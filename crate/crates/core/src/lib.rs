//! Per-antenna ADC bit allocation for uplink Massive MIMO.
//!
//! The crate covers the full chain from network drops to spectral and energy
//! efficiency:
//!
//! * [`network`]: geometry, large-scale fading, correlation matrices, power
//!   control and channel sampling.
//! * [`impairments`]: additive hardware distortion and the bits ↔ ε map.
//! * [`estimation`]: LMMSE channel estimation under pilot distortion.
//! * [`allocation`]: closed-form minimum-pilot-distortion bits and integer
//!   rounding.
//! * [`se`]: closed-form MR SINR and Monte-Carlo UatF SINR.
//! * [`quantizer`]: Lloyd-Max / uniform codebooks and the exact-quantization
//!   pipeline.
//! * [`gp`]: a small log-barrier geometric-programming solver.
//! * [`optimize`]: SINR and power-constrained geometric programs and the
//!   iterative Ψ update.
//! * [`power`]: ADC power and energy efficiency.
//! * [`campaign`]: configuration, seeded sweeps and CSV output.

pub mod allocation;
pub mod campaign;
pub mod error;
pub mod estimation;
pub mod gp;
pub mod impairments;
pub mod linalg;
pub mod network;
pub mod optimize;
pub mod power;
pub mod quantizer;
pub mod rng;
pub mod se;

pub use error::{Error, Result};
