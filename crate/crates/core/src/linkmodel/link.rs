use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ofdm::UnitaryDft;
use crate::cmat::ComplexMat;
use crate::eigenbeam::BlockBeamformer;
use crate::error::{Error, Result};
use crate::quantizer::{quantize, AdcModel};
use crate::seed::stream_rng;
use crate::svchannel::DiscreteChannel;

/// Slack on the transmit power constraint.
const POWER_SLACK: f64 = 1e-9;

/// Per-subcarrier `n_r × n_t` channel matrices.
///
/// Entry `(j, i)` of subcarrier `n` is the DFT of `h_{ji}` at bin `n`. Stacking
/// antenna-major (row `j·N + n`, column `i·N + n`) gives the block matrix `D`
/// whose blocks `D_{ji}` are diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqChannel {
    n_rx: usize,
    n_tx: usize,
    per_subcarrier: Vec<ComplexMat>,
}

impl FreqChannel {
    pub fn new(per_subcarrier: Vec<ComplexMat>) -> Result<Self> {
        let first = per_subcarrier
            .first()
            .ok_or_else(|| Error::InvalidArgument("no subcarriers".into()))?;
        let (n_rx, n_tx) = (first.rows(), first.cols());
        if per_subcarrier.iter().any(|m| m.rows() != n_rx || m.cols() != n_tx) {
            return Err(Error::InvalidArgument("subcarrier matrices differ in shape".into()));
        }
        Ok(FreqChannel {
            n_rx,
            n_tx,
            per_subcarrier,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn at(&self, subcarrier: usize) -> &ComplexMat {
        &self.per_subcarrier[subcarrier]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexMat> {
        self.per_subcarrier.iter()
    }

    /// Dense `(n_r N) × (n_t N)` block matrix in antenna-major stacking.
    pub fn to_dense(&self) -> ComplexMat {
        let n = self.subcarriers();
        ComplexMat::from_fn(self.n_rx * n, self.n_tx * n, |r, c| {
            let (j, nr) = (r / n, r % n);
            let (i, nc) = (c / n, c % n);
            if nr == nc {
                self.per_subcarrier[nr][(j, i)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// `E‖r‖² = ‖D B‖_F² + N n_r ξ²` for unit-energy symbols.
pub fn expected_rx_power(fc: &FreqChannel, tx: &BlockBeamformer, noise_variance: f64) -> f64 {
    let signal: f64 = fc
        .iter()
        .enumerate()
        .map(|(n, h)| h.mul(tx.block(n)).frobenius_sq())
        .sum();
    signal + (fc.subcarriers() * fc.n_rx()) as f64 * noise_variance
}

/// Running moments of the quantization error, per real dimension, in the
/// quantizer's own (post-AGC) scale.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuantErrorStats {
    pub count: u64,
    pub sum_input: f64,
    pub sum_input_sq: f64,
    pub sum_error: f64,
    pub sum_error_sq: f64,
    pub sum_error_input: f64,
    pub clipped: u64,
}

impl QuantErrorStats {
    pub fn push(&mut self, input: f64, output: f64) {
        let e = input - output;
        self.count += 1;
        self.sum_input += input;
        self.sum_input_sq += input * input;
        self.sum_error += e;
        self.sum_error_sq += e * e;
        self.sum_error_input += e * input;
        if input.abs() >= 1.0 {
            self.clipped += 1;
        }
    }

    pub fn merge(&mut self, other: &QuantErrorStats) {
        self.count += other.count;
        self.sum_input += other.sum_input;
        self.sum_input_sq += other.sum_input_sq;
        self.sum_error += other.sum_error;
        self.sum_error_sq += other.sum_error_sq;
        self.sum_error_input += other.sum_error_input;
        self.clipped += other.clipped;
    }

    pub fn error_variance(&self) -> f64 {
        let n = self.count as f64;
        let mean = self.sum_error / n;
        self.sum_error_sq / n - mean * mean
    }

    pub fn input_variance(&self) -> f64 {
        let n = self.count as f64;
        let mean = self.sum_input / n;
        self.sum_input_sq / n - mean * mean
    }

    /// Sample correlation coefficient between error and input.
    pub fn correlation(&self) -> f64 {
        let n = self.count as f64;
        let cov = self.sum_error_input / n - (self.sum_error / n) * (self.sum_input / n);
        cov / (self.error_variance() * self.input_variance()).sqrt()
    }
}

/// Received frequency-domain frames and, for a finite ADC, error statistics.
#[derive(Debug, Clone)]
pub struct LinkOutput {
    /// One vector per frame, stacked antenna-major: entry `j·N + n`.
    pub frames: Vec<Vec<Complex64>>,
    pub quantization: Option<QuantErrorStats>,
}

/// Runs consecutive OFDM frames through the sampled MIMO chain.
///
/// Each frame's data vector `x` (ordered as the beamformer's streams) is
/// precoded `u = Bx`, taken to time domain per antenna with `F_N†`, given a
/// cyclic prefix and sent back to back with the others. Every antenna pair is
/// a linear convolution with its taps, so a frame's prefix absorbs the tail of
/// the one before it. Complex Gaussian noise of variance `noise_variance` is
/// added per sample. With an ADC the samples pass through the AGC gain, the
/// quantizer and `1/G`. Finally the prefix is stripped and `F_N` applied per
/// receive antenna.
pub fn simulate_waveform_link(
    channel: &DiscreteChannel,
    tx: &BlockBeamformer,
    frames: &[Vec<Complex64>],
    noise_variance: f64,
    adc: Option<&AdcModel>,
    cp_len: usize,
    seed: u64,
) -> Result<LinkOutput> {
    let n = tx.subcarriers();
    let (n_rx, n_tx) = (channel.n_rx(), channel.n_tx());
    if tx.antennas() != n_tx {
        return Err(Error::InvalidArgument(format!(
            "beamformer drives {} antennas, channel has {n_tx}",
            tx.antennas()
        )));
    }
    if channel.n_taps() > cp_len.max(1) || cp_len >= n {
        return Err(Error::InvalidArgument(format!(
            "{} taps with a {cp_len}-sample prefix and {n} subcarriers",
            channel.n_taps()
        )));
    }
    let budget = (n * n_tx.min(n_rx)) as f64;
    let trace = tx.trace();
    if trace > budget + POWER_SLACK {
        return Err(Error::PowerConstraint { trace, budget });
    }
    if !(noise_variance >= 0.0) {
        return Err(Error::InvalidArgument("noise variance must be nonnegative".into()));
    }
    if let Some(x) = frames.iter().find(|x| x.len() != tx.streams()) {
        return Err(Error::InvalidArgument(format!(
            "frame carries {} symbols, beamformer expects {}",
            x.len(),
            tx.streams()
        )));
    }

    let dft = UnitaryDft::new(n);
    let block = n + cp_len;
    let total = block * frames.len();

    // Transmit waveforms, one per antenna.
    let mut tx_time = vec![vec![Complex64::new(0.0, 0.0); total]; n_tx];
    for (f, x) in frames.iter().enumerate() {
        let mut u = tx.spread(x);
        for (i, wave) in tx_time.iter_mut().enumerate() {
            let s = &mut u[i * n..(i + 1) * n];
            dft.inverse(s);
            let start = f * block;
            wave[start..start + cp_len].copy_from_slice(&s[n - cp_len..]);
            wave[start + cp_len..start + block].copy_from_slice(s);
        }
    }

    // Channel, noise and ADC.
    let mut rng = stream_rng(seed);
    let sigma = (noise_variance / 2.0).sqrt();
    let mut stats = adc.map(|_| QuantErrorStats::default());
    let mut rx_time = vec![vec![Complex64::new(0.0, 0.0); total]; n_rx];
    for (j, out) in rx_time.iter_mut().enumerate() {
        for (i, wave) in tx_time.iter().enumerate() {
            let h = channel.response(j, i);
            for (m, &tap) in h.iter().enumerate() {
                if tap == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for t in m..total {
                    out[t] += tap * wave[t - m];
                }
            }
        }
        for sample in out.iter_mut() {
            if noise_variance > 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *sample += Complex64::new(re * sigma, im * sigma);
            }
            if let (Some(adc), Some(stats)) = (adc, stats.as_mut()) {
                let g = adc.gain();
                let (a, b) = (g * sample.re, g * sample.im);
                let (qa, qb) = (quantize(a, adc.bits()), quantize(b, adc.bits()));
                stats.push(a, qa);
                stats.push(b, qb);
                *sample = Complex64::new(qa / g, qb / g);
            }
        }
    }

    let frames_out = (0..frames.len())
        .map(|f| {
            let mut v = Vec::with_capacity(n_rx * n);
            for wave in &rx_time {
                let start = f * block + cp_len;
                let mut r = wave[start..start + n].to_vec();
                dft.forward(&mut r);
                v.extend_from_slice(&r);
            }
            v
        })
        .collect();

    Ok(LinkOutput {
        frames: frames_out,
        quantization: stats,
    })
}
