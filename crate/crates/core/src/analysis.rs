//! Closed-form performance predictions for the diagonalized link under the
//! PQN model: per-mode SINR, the uncoded-BER surrogate `S`, and the MSE.

use std::f64::consts::SQRT_2;

use crate::params::AdcBits;
use crate::quantizer::{mean_signal_power, pqn_constant, PqnModel};

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `g_M = 3/(M − 1)`.
pub fn qam_gain(qam_order: u32) -> f64 {
    3.0 / (qam_order as f64 - 1.0)
}

/// `SINR_k = P_k Δ_k² / ((c+1)ξ² + ξ_q²)`.
pub fn sinr_per_mode(powers: &[f64], singular_values: &[f64], noise_variance: f64, c: f64, xi_q2: f64) -> Vec<f64> {
    let den = (c + 1.0) * noise_variance + xi_q2;
    powers
        .iter()
        .zip(singular_values)
        .map(|(p, d)| p * d * d / den)
        .collect()
}

/// `S = (1 − 1/√M) · mean_k Q(√(g_M SINR_k))`, with `ξ_q²` derived from `c`
/// and the allocation.
pub fn s_value(powers: &[f64], singular_values: &[f64], noise_variance: f64, qam_order: u32, c: f64) -> f64 {
    let xi_q2 = c * mean_signal_power(powers, singular_values);
    let sinr = sinr_per_mode(powers, singular_values, noise_variance, c, xi_q2);
    s_from_sinr(&sinr, qam_order)
}

fn s_from_sinr(sinr: &[f64], qam_order: u32) -> f64 {
    if sinr.is_empty() {
        return 0.0;
    }
    let g = qam_gain(qam_order);
    let sum: f64 = sinr.iter().map(|s| q_function((g * s).sqrt())).sum();
    (1.0 - 1.0 / (qam_order as f64).sqrt()) * sum / sinr.len() as f64
}

/// First-order BER `4S / log₂M`, clamped to `[0, 0.5]`.
pub fn ber_from_s(s: f64, qam_order: u32) -> f64 {
    (4.0 * s / qam_order.trailing_zeros() as f64).clamp(0.0, 0.5)
}

/// `Σ(√P_k Δ_k − 1)² + (ξ² + ξ_q²)·mode_count` for the diagonal system.
pub fn mse(effective_diag: &[f64], noise_variance: f64, xi_q2: f64, mode_count: usize) -> f64 {
    let bias: f64 = effective_diag.iter().map(|e| (e - 1.0).powi(2)).sum();
    bias + (noise_variance + xi_q2) * mode_count as f64
}

/// Everything predicted for one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfPrediction {
    pub sinr: Vec<f64>,
    pub s: f64,
    pub ber: f64,
    pub mse: f64,
    pub g: f64,
    pub c: f64,
    pub xi_q2: f64,
}

impl PerfPrediction {
    /// Predictions for powers `P` on modes `Δ` with PQN constant `c`.
    pub fn new(powers: &[f64], singular_values: &[f64], noise_variance: f64, qam_order: u32, c: f64) -> Self {
        let xi_q2 = c * mean_signal_power(powers, singular_values);
        let sinr = sinr_per_mode(powers, singular_values, noise_variance, c, xi_q2);
        let s = s_from_sinr(&sinr, qam_order);
        let effective: Vec<f64> = powers.iter().zip(singular_values).map(|(p, d)| p.sqrt() * d).collect();
        PerfPrediction {
            s,
            ber: ber_from_s(s, qam_order),
            mse: mse(&effective, noise_variance, xi_q2, powers.len()),
            g: qam_gain(qam_order),
            c,
            xi_q2,
            sinr,
        }
    }

    /// Mean squared error per mode.
    pub fn mse_per_mode(&self) -> f64 {
        self.mse / self.sinr.len().max(1) as f64
    }
}

/// `(S, BER)` for the published PQN constant `c = 2^−2b/(6α)`.
pub fn analytic_uncoded_ber(
    powers: &[f64],
    singular_values: &[f64],
    noise_variance: f64,
    qam_order: u32,
    bits: AdcBits,
    alpha: f64,
) -> (f64, f64) {
    let c = pqn_constant(bits, alpha, PqnModel::Nominal);
    let s = s_value(powers, singular_values, noise_variance, qam_order, c);
    (s, ber_from_s(s, qam_order))
}
