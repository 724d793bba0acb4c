//! Link-level simulation of MIMO-OFDM systems whose receivers use
//! low-resolution ADCs.
//!
//! The transmitter diagonalizes the frequency-selective MIMO channel with
//! per-subcarrier SVD beamforming and then allocates power across the
//! resulting eigenmodes. The crate provides:
//!
//! * [`svchannel`]: Saleh-Valenzuela clustered multipath channels,
//! * [`linkmodel`]: QAM, OFDM and the sampled transmit/quantize/receive chain,
//! * [`quantizer`]: the uniform ADC, AGC and pseudo-quantization-noise model,
//! * [`eigenbeam`]: eigenmode decomposition and block beamformers,
//! * [`poweralloc`]: EEPA, AOEPA, OEPA and MMSE power allocation,
//! * [`analysis`]: closed-form BER and MSE predictions,
//! * [`harness`]: Monte-Carlo sweeps over channel ensembles,
//! * [`cli`]: the `eigenadc` command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod cmat;
pub mod eigenbeam;
pub mod error;
pub mod harness;
pub mod linkmodel;
pub mod params;
pub mod poweralloc;
pub mod quantizer;
pub mod seed;
pub mod svchannel;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use params::{AdcBits, SimConfig, SvParams};
