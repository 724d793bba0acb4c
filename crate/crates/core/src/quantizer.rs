//! Finite-precision ADC: the uniform mid-point quantizer, AGC calibration and
//! the constants of the pseudo-quantization-noise (PQN) model.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::AdcBits;

/// Uniform mid-point quantizer with range (−1, 1) and `bits` bits.
///
/// Levels sit at `±(k / 2^(b−1) + 2^−b)` for `k = 0 .. 2^(b−1)`; inputs with
/// `|x| >= 1` clip to `±(1 − 2^−b)`. Zero maps to the positive level `2^−b`.
pub fn quantize(x: f64, bits: u32) -> f64 {
    debug_assert!(bits >= 1);
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let half_levels = (1u64 << (bits - 1)) as f64;
    let lsb = 1.0 / (1u64 << bits) as f64;
    let magnitude = x.abs();
    if magnitude < 1.0 {
        sign * ((half_levels * magnitude).floor() / half_levels + lsb)
    } else {
        sign * (1.0 - lsb)
    }
}

/// AGC gain `G = sqrt(N n_R α / E‖r‖²)`.
pub fn agc_gain(expected_rx_power: f64, subcarriers: usize, n_rx: usize, alpha: f64) -> Result<f64> {
    if !(expected_rx_power.is_finite() && expected_rx_power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "expected received power must be positive, got {expected_rx_power}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "AGC backoff must be positive, got {alpha}"
        )));
    }
    Ok((subcarriers as f64 * n_rx as f64 * alpha / expected_rx_power).sqrt())
}

/// Which quantization-noise power the PQN model assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PqnModel {
    /// `2^−2b / 6` per complex sample after the AGC, so `c = 2^−2b / (6α)`.
    #[default]
    Nominal,
    /// Step²/12 per real dimension for the step `2^(1−b)`, i.e.
    /// `2^−2b · 2/3` per complex sample and `c = 2^−2b / (1.5α)`.
    UniformStep,
}

impl fmt::Display for PqnModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PqnModel::Nominal => "nominal",
            PqnModel::UniformStep => "uniform",
        })
    }
}

impl FromStr for PqnModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "nominal" => Ok(PqnModel::Nominal),
            "uniform" => Ok(PqnModel::UniformStep),
            other => Err(format!("expected `nominal` or `uniform`, got `{other}`")),
        }
    }
}

impl PqnModel {
    /// Quantization-noise variance per complex sample in the quantizer's own scale.
    pub fn noise_power(self, bits: u32) -> f64 {
        let p = 2f64.powi(-2 * bits as i32);
        match self {
            PqnModel::Nominal => p / 6.0,
            PqnModel::UniformStep => p * 2.0 / 3.0,
        }
    }
}

/// Dimensionless PQN constant `c`; zero for an ideal converter.
pub fn pqn_constant(bits: AdcBits, alpha: f64, model: PqnModel) -> f64 {
    match bits {
        AdcBits::Full => 0.0,
        AdcBits::Finite(b) => model.noise_power(b) / alpha,
    }
}

/// `(c, ξ_q²)` with `ξ_q² = c · mean_k(P_k |Δ_k|²)`.
pub fn pqn_params(bits: AdcBits, alpha: f64, powers: &[f64], singular_values: &[f64]) -> (f64, f64) {
    pqn_params_with(PqnModel::Nominal, bits, alpha, powers, singular_values)
}

pub fn pqn_params_with(
    model: PqnModel,
    bits: AdcBits,
    alpha: f64,
    powers: &[f64],
    singular_values: &[f64],
) -> (f64, f64) {
    let c = pqn_constant(bits, alpha, model);
    (c, c * mean_signal_power(powers, singular_values))
}

/// `mean_k(P_k |Δ_k|²)`.
pub fn mean_signal_power(powers: &[f64], singular_values: &[f64]) -> f64 {
    assert_eq!(powers.len(), singular_values.len());
    if powers.is_empty() {
        return 0.0;
    }
    let total: f64 = powers.iter().zip(singular_values).map(|(p, d)| p * d * d).sum();
    total / powers.len() as f64
}

/// A calibrated ADC: resolution, AGC backoff and the gain derived from the
/// expected received power.
#[derive(Debug, Clone, PartialEq)]
pub struct AdcModel {
    bits: u32,
    alpha: f64,
    gain: f64,
    c: f64,
    xi_q2: f64,
}

impl AdcModel {
    pub fn calibrate(
        bits: u32,
        alpha: f64,
        model: PqnModel,
        expected_rx_power: f64,
        subcarriers: usize,
        n_rx: usize,
    ) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::InvalidArgument(format!("bit count {bits} outside 1..=16")));
        }
        let gain = agc_gain(expected_rx_power, subcarriers, n_rx, alpha)?;
        let c = pqn_constant(AdcBits::Finite(bits), alpha, model);
        Ok(AdcModel {
            bits,
            alpha,
            gain,
            c,
            xi_q2: model.noise_power(bits) / (gain * gain),
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// PQN variance per complex received sample, in channel scale.
    pub fn xi_q2(&self) -> f64 {
        self.xi_q2
    }

    /// Applies the AGC, quantizes real and imaginary parts and undoes the gain.
    pub fn convert(&self, z: Complex64) -> Complex64 {
        let g = self.gain;
        Complex64::new(quantize(g * z.re, self.bits) / g, quantize(g * z.im, self.bits) / g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_evaluated_levels() {
        assert_eq!(quantize(0.3, 3), 0.375);
        assert_eq!(quantize(1.5, 3), 0.875);
        assert_eq!(quantize(-1.5, 3), -0.875);
        assert_eq!(quantize(0.0, 3), 0.125);
        assert_eq!(quantize(1.0, 3), 0.875);
        assert_eq!(quantize(0.999_999, 1), 0.5);
        assert_eq!(quantize(-0.2, 1), -0.5);
    }

    #[test]
    fn level_count_is_two_to_the_bits() {
        for b in 1..=8u32 {
            let mut levels: Vec<f64> = (-40_000..=40_000).map(|i| quantize(i as f64 * 3.0e-5, b)).collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            assert_eq!(levels.len(), 1 << b, "b = {b}");
        }
    }

    proptest! {
        #[test]
        fn odd_symmetry(x in -3.0f64..3.0, b in 1u32..=12) {
            prop_assume!(x != 0.0);
            prop_assert_eq!(quantize(-x, b), -quantize(x, b));
        }

        #[test]
        fn half_step_bound(x in -1.0f64..=1.0, b in 1u32..=16) {
            prop_assert!((x - quantize(x, b)).abs() <= 2f64.powi(-(b as i32)));
        }
    }

    #[test]
    fn agc_examples() {
        assert!((agc_gain(0.8, 4, 2, 0.1).unwrap() - 1.0).abs() < 1e-15);
        let g = agc_gain(1024.0, 512, 2, 0.1).unwrap();
        assert!((g * g - 0.1).abs() < 1e-15);
        let g2 = agc_gain(2048.0, 512, 2, 0.1).unwrap();
        assert!((g2 * g2 - 0.05).abs() < 1e-15);
        assert!(agc_gain(0.0, 4, 2, 0.1).is_err());
        assert!(agc_gain(-1.0, 4, 2, 0.1).is_err());
    }

    #[test]
    fn pqn_examples() {
        assert_eq!(pqn_params(AdcBits::Full, 0.1, &[1.0], &[1.0]), (0.0, 0.0));
        let (c, _) = pqn_params(AdcBits::Finite(3), 0.1, &[1.0], &[1.0]);
        assert!((c - 1.0 / (64.0 * 0.6)).abs() < 1e-15);
        assert!((c - 0.026042).abs() < 1e-6);
        let (c, xi) = pqn_params(AdcBits::Finite(3), 0.1, &[1.0; 4], &[1.0; 4]);
        assert!((xi - c).abs() < 1e-15);
        let uniform = pqn_constant(AdcBits::Finite(3), 0.1, PqnModel::UniformStep);
        assert!((uniform - 4.0 * c).abs() < 1e-15);
    }

    #[test]
    fn calibrated_model_constants() {
        let adc = AdcModel::calibrate(3, 0.1, PqnModel::Nominal, 1024.0, 512, 2).unwrap();
        assert!((adc.gain() * adc.gain() - 0.1).abs() < 1e-15);
        // ξ_q² = (1/G²)·2^−2b/6 = c · E‖r‖²/(N n_R)
        assert!((adc.xi_q2() - adc.c() * 1.0).abs() < 1e-15);
        let z = adc.convert(Complex64::new(0.3 / adc.gain(), -1.5 / adc.gain()));
        assert!((z.re * adc.gain() - 0.375).abs() < 1e-15);
        assert!((z.im * adc.gain() + 0.875).abs() < 1e-15);
    }
}
