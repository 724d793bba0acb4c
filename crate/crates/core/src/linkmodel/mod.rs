//! QAM mapping, OFDM transforms and the sampled transmit → channel → ADC →
//! receive chain.

mod link;
mod ofdm;
mod qam;

pub use link::{expected_rx_power, simulate_waveform_link, FreqChannel, LinkOutput, QuantErrorStats};
pub use ofdm::{circulant_freq_response, circulant_matrix, dft_matrix, UnitaryDft};
pub use qam::{qam_demodulate, qam_modulate, Qam, QamSymbolBlock};
