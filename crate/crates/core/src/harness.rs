//! Monte-Carlo BER/MSE estimation over channel ensembles and SNR sweeps.
//!
//! A result row is one (allocator, ADC resolution, SNR) cell. Frames are sent
//! round-robin over the channel ensemble, one frame per channel per round, and
//! a cell stops after the round in which it reaches `min_errors` bit errors or
//! its symbol budget. Random streams depend only on the master seed, the
//! channel index and the frame index, so every cell sees the same bits and
//! noise realizations.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::PerfPrediction;
use crate::eigenbeam::{assemble_freq_channel, build_beamformers, eigen_decompose, BeamformerPair, EigenModes};
use crate::error::{Error, Result};
use crate::linkmodel::{expected_rx_power, simulate_waveform_link, Qam, QamSymbolBlock};
use crate::params::{noise_variance_from_snr_db, AdcBits, SimConfig};
use crate::poweralloc::{allocate, AllocContext, Allocator, PowerAllocation};
use crate::quantizer::{pqn_constant, AdcModel};
use crate::seed::{derive_path, stream_rng, tags};
use crate::svchannel::{ChannelGenerator, DiscreteChannel};

/// How received symbols are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    /// Full time-domain chain with the real quantizer.
    #[default]
    Waveform,
    /// Diagonal model with Gaussian thermal and quantization noise.
    Pqn,
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMode::Waveform => "waveform",
            SimMode::Pqn => "pqn",
        })
    }
}

impl FromStr for SimMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "waveform" => Ok(SimMode::Waveform),
            "pqn" => Ok(SimMode::Pqn),
            other => Err(format!("expected `waveform` or `pqn`, got `{other}`")),
        }
    }
}

/// Seed of channel realization `index`.
pub fn channel_seed(master_seed: u64, index: usize) -> u64 {
    derive_path(master_seed, &[tags::CHANNEL, index as u64])
}

/// The ensemble used by every sweep of `config`.
pub fn generate_channels(config: &SimConfig, count: usize) -> Result<Vec<DiscreteChannel>> {
    let generator = ChannelGenerator::new(&config.sv, config.taps)?;
    (0..count)
        .into_par_iter()
        .map(|c| generator.realize(config.n_r, config.n_t, channel_seed(config.seed, c)))
        .collect()
}

/// One channel prepared for a given allocator, ADC and SNR.
#[derive(Debug, Clone)]
pub struct PreparedLink {
    pub modes: EigenModes,
    pub allocation: PowerAllocation,
    pub beamformers: BeamformerPair,
    pub adc: Option<AdcModel>,
    pub noise_variance: f64,
    pub prediction: PerfPrediction,
    /// `√P_k Δ_k` per mode.
    pub effective_gain: Vec<f64>,
}

impl PreparedLink {
    pub fn new(
        config: &SimConfig,
        channel: &DiscreteChannel,
        allocator: Allocator,
        adc_bits: AdcBits,
        snr_db: f64,
    ) -> Result<Self> {
        let noise_variance = noise_variance_from_snr_db(snr_db);
        let fc = assemble_freq_channel(channel, config.subcarriers)?;
        let modes = eigen_decompose(&fc)?;
        let singular_values = modes.singular_values();
        let ctx = AllocContext {
            noise_variance,
            qam_order: config.qam_order,
            adc_bits,
            alpha: config.agc_alpha,
            pqn_model: config.pqn_model,
            oepa_form: config.oepa_form,
            budget: config.power_budget(),
        };
        let allocation = allocate(allocator, &singular_values, &ctx)
            .map_err(|e| e.context(format!("{allocator} allocation at {snr_db} dB")))?;
        let beamformers = build_beamformers(&modes, &allocation.powers, ctx.budget)?;
        let adc = match adc_bits {
            AdcBits::Full => None,
            AdcBits::Finite(b) => Some(AdcModel::calibrate(
                b,
                config.agc_alpha,
                config.pqn_model,
                expected_rx_power(&fc, &beamformers.tx, noise_variance),
                config.subcarriers,
                config.n_r,
            )?),
        };
        let c = pqn_constant(adc_bits, config.agc_alpha, config.pqn_model);
        let prediction = PerfPrediction::new(
            &allocation.powers,
            &singular_values,
            noise_variance,
            config.qam_order,
            c,
        );
        let effective_gain = allocation
            .powers
            .iter()
            .zip(&singular_values)
            .map(|(p, d)| p.sqrt() * d)
            .collect();
        Ok(PreparedLink {
            modes,
            allocation,
            beamformers,
            adc,
            noise_variance,
            prediction,
            effective_gain,
        })
    }

    /// Sends one frame and returns its error counts.
    pub fn run_frame(
        &self,
        config: &SimConfig,
        qam: &Qam,
        channel: &DiscreteChannel,
        mode: SimMode,
        frame_seed: u64,
        noise_seed: u64,
    ) -> Result<FrameStats> {
        let mut rng = stream_rng(frame_seed);
        let block = QamSymbolBlock::random(qam, self.modes.count(), &mut rng);
        let estimate = match mode {
            SimMode::Waveform => {
                let out = simulate_waveform_link(
                    channel,
                    &self.beamformers.tx,
                    std::slice::from_ref(&block.symbols),
                    self.noise_variance,
                    self.adc.as_ref(),
                    config.cp_len,
                    noise_seed,
                )?;
                self.beamformers.rx.combine(&out.frames[0])
            }
            SimMode::Pqn => {
                let q = self.adc.as_ref().map_or(0.0, AdcModel::xi_q2);
                let sigma = ((self.noise_variance + q) / 2.0).sqrt();
                let mut noise = stream_rng(noise_seed);
                block
                    .symbols
                    .iter()
                    .zip(&self.effective_gain)
                    .map(|(x, g)| {
                        let re: f64 = noise.sample(StandardNormal);
                        let im: f64 = noise.sample(StandardNormal);
                        x * g + Complex64::new(re, im) * sigma
                    })
                    .collect()
            }
        };
        Ok(self.score(qam, &block, &estimate))
    }

    fn score(&self, qam: &Qam, block: &QamSymbolBlock, estimate: &[Complex64]) -> FrameStats {
        let bps = qam.bits_per_symbol();
        let mut stats = FrameStats::default();
        let mut decided = Vec::with_capacity(bps);
        for (k, (&x_hat, &x)) in estimate.iter().zip(&block.symbols).enumerate() {
            stats.squared_error += (x - x_hat).norm_sqr();
            let g = self.effective_gain[k];
            let z = if g > 0.0 { x_hat / g } else { Complex64::new(0.0, 0.0) };
            decided.clear();
            qam.demap_into(z, &mut decided);
            stats.bit_errors += decided
                .iter()
                .zip(&block.bits[k * bps..(k + 1) * bps])
                .filter(|(a, b)| a != b)
                .count() as u64;
        }
        stats.symbols = estimate.len() as u64;
        stats.bits = stats.symbols * bps as u64;
        stats
    }
}

/// Counts accumulated over frames.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameStats {
    pub symbols: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub squared_error: f64,
}

impl FrameStats {
    fn add(&mut self, other: &FrameStats) {
        self.symbols += other.symbols;
        self.bits += other.bits;
        self.bit_errors += other.bit_errors;
        self.squared_error += other.squared_error;
    }
}

/// One result row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub snr_db: f64,
    pub allocator: Allocator,
    pub adc_bits: AdcBits,
    /// QAM symbols sent.
    pub trials: u64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber_mc: f64,
    pub ber_stderr: f64,
    pub ber_analytic: f64,
    /// Per-mode mean squared error of `A†v` against `x`.
    pub mse_mc: f64,
    pub mse_analytic: f64,
    /// Seed of the first channel in the ensemble.
    pub channel_seed: u64,
    /// False when some OEPA solve hit its iteration cap.
    pub converged: bool,
}

/// `√(p(1 − p)/n)`.
pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

fn frame_seeds(master_seed: u64, channel: usize, frame: u64) -> (u64, u64) {
    (
        derive_path(master_seed, &[tags::FRAME, channel as u64, frame]),
        derive_path(master_seed, &[tags::NOISE, channel as u64, frame]),
    )
}

/// One cell over a channel ensemble.
fn run_cell(
    config: &SimConfig,
    channels: &[DiscreteChannel],
    allocator: Allocator,
    adc_bits: AdcBits,
    snr_db: f64,
    mode: SimMode,
    seed: u64,
) -> Result<TrialResult> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("channel ensemble is empty".into()));
    }
    let qam = Qam::new(config.qam_order)?;
    let links = channels
        .iter()
        .map(|ch| PreparedLink::new(config, ch, allocator, adc_bits, snr_db))
        .collect::<Result<Vec<_>>>()?;
    let mut per_channel = vec![FrameStats::default(); channels.len()];
    let mut total = FrameStats::default();
    let mut frame = 0u64;
    loop {
        for (c, (link, ch)) in links.iter().zip(channels).enumerate() {
            let (fs, ns) = frame_seeds(seed, c, frame);
            let stats = link.run_frame(config, &qam, ch, mode, fs, ns)?;
            per_channel[c].add(&stats);
            total.add(&stats);
        }
        frame += 1;
        if total.bit_errors >= config.min_errors || total.symbols >= config.trials {
            break;
        }
    }
    let ber_mc = total.bit_errors as f64 / total.bits as f64;
    // analytic values weighted like the Monte-Carlo estimate
    let weight = |c: usize| per_channel[c].bits as f64 / total.bits as f64;
    let ber_analytic = links
        .iter()
        .enumerate()
        .map(|(c, l)| weight(c) * l.prediction.ber)
        .sum();
    let mse_analytic = links
        .iter()
        .enumerate()
        .map(|(c, l)| weight(c) * l.prediction.mse_per_mode())
        .sum();
    Ok(TrialResult {
        snr_db,
        allocator,
        adc_bits,
        trials: total.symbols,
        bits_sent: total.bits,
        bit_errors: total.bit_errors,
        ber_mc,
        ber_stderr: binomial_stderr(ber_mc, total.bits),
        ber_analytic,
        mse_mc: total.squared_error / total.symbols as f64,
        mse_analytic,
        channel_seed: channel_seed(config.seed, 0),
        converged: links.iter().all(|l| l.allocation.converged),
    })
}

/// Monte-Carlo estimate on a single channel.
pub fn run_trial(
    config: &SimConfig,
    channel: &DiscreteChannel,
    allocator: Allocator,
    adc_bits: AdcBits,
    snr_db: f64,
    seed: u64,
    mode: SimMode,
) -> Result<TrialResult> {
    let mut r = run_cell(
        config,
        std::slice::from_ref(channel),
        allocator,
        adc_bits,
        snr_db,
        mode,
        seed,
    )?;
    r.channel_seed = seed;
    Ok(r)
}

/// Sorted rows plus the fingerprint of the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub fingerprint: String,
    pub rows: Vec<TrialResult>,
}

pub const RESULT_HEADER: &str = "config_hash,allocator,adc_bits,snr_db,trials,bits_sent,bit_errors,ber_mc,ber_stderr,ber_analytic,mse_mc,mse_analytic,converged";

/// Finite resolutions ascending, full precision last.
pub fn adc_order(a: AdcBits, b: AdcBits) -> Ordering {
    let key = |x: AdcBits| x.bits().unwrap_or(u32::MAX);
    key(a).cmp(&key(b))
}

fn row_order(a: &TrialResult, b: &TrialResult) -> Ordering {
    a.allocator
        .cmp(&b.allocator)
        .then(adc_order(a.adc_bits, b.adc_bits))
        .then(a.snr_db.total_cmp(&b.snr_db))
}

impl ResultTable {
    pub fn new(fingerprint: String, mut rows: Vec<TrialResult>) -> Self {
        rows.sort_by(row_order);
        ResultTable { fingerprint, rows }
    }

    pub fn find(&self, allocator: Allocator, adc_bits: AdcBits, snr_db: f64) -> Option<&TrialResult> {
        self.rows
            .iter()
            .find(|r| r.allocator == allocator && r.adc_bits == adc_bits && r.snr_db == snr_db)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{RESULT_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.fingerprint,
                r.allocator,
                r.adc_bits,
                fmt_f64(r.snr_db),
                r.trials,
                r.bits_sent,
                r.bit_errors,
                fmt_f64(r.ber_mc),
                fmt_f64(r.ber_stderr),
                fmt_f64(r.ber_analytic),
                fmt_f64(r.mse_mc),
                fmt_f64(r.mse_analytic),
                r.converged
            )?;
        }
        Ok(())
    }

    /// Long-format plot data: one Monte-Carlo/analytic pair per series and SNR.
    pub fn write_plot_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "config_hash,series,snr_db,ber_mc,ber_analytic")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{}_b{},{},{},{}",
                self.fingerprint,
                r.allocator,
                r.adc_bits,
                fmt_f64(r.snr_db),
                fmt_f64(r.ber_mc),
                fmt_f64(r.ber_analytic)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// Seventeen significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_lists(snr_list: &[f64], allocators: &[Allocator], adc_list: &[AdcBits], n_channels: usize) -> Result<()> {
    if snr_list.is_empty() || allocators.is_empty() || adc_list.is_empty() || n_channels == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least one SNR, allocator, ADC resolution and channel".into(),
        ));
    }
    if let Some(s) = snr_list.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("SNR {s} is not finite")));
    }
    Ok(())
}

/// Full sweep; cells run in parallel and the table is sorted afterwards.
pub fn sweep(
    config: &SimConfig,
    snr_list: &[f64],
    allocators: &[Allocator],
    adc_list: &[AdcBits],
    n_channels: usize,
) -> Result<ResultTable> {
    config.validate()?;
    check_lists(snr_list, allocators, adc_list, n_channels)?;
    let channels = generate_channels(config, n_channels)?;
    sweep_channels(config, &channels, snr_list, allocators, adc_list)
}

/// Sweep over a given ensemble.
pub fn sweep_channels(
    config: &SimConfig,
    channels: &[DiscreteChannel],
    snr_list: &[f64],
    allocators: &[Allocator],
    adc_list: &[AdcBits],
) -> Result<ResultTable> {
    check_lists(snr_list, allocators, adc_list, channels.len())?;
    let cells = cells(snr_list, allocators, adc_list);
    let rows = cells
        .par_iter()
        .map(|&(a, b, s)| run_cell(config, channels, a, b, s, config.mode, config.seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultTable::new(config.fingerprint(), rows))
}

fn cells(snr_list: &[f64], allocators: &[Allocator], adc_list: &[AdcBits]) -> Vec<(Allocator, AdcBits, f64)> {
    let mut out = Vec::new();
    for &a in allocators {
        for &b in adc_list {
            for &s in snr_list {
                out.push((a, b, s));
            }
        }
    }
    out
}

/// Analytic-only row.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub allocator: Allocator,
    pub adc_bits: AdcBits,
    pub snr_db: f64,
    pub s_value: f64,
    pub ber_analytic: f64,
    pub mse_analytic: f64,
    pub converged: bool,
}

pub const PREDICTION_HEADER: &str = "config_hash,allocator,adc_bits,snr_db,s_value,ber_analytic,mse_analytic,converged";

/// Ensemble-averaged predictions without any Monte Carlo.
pub fn predict(
    config: &SimConfig,
    channels: &[DiscreteChannel],
    snr_list: &[f64],
    allocators: &[Allocator],
    adc_list: &[AdcBits],
) -> Result<Vec<PredictionRow>> {
    check_lists(snr_list, allocators, adc_list, channels.len())?;
    let mut rows = cells(snr_list, allocators, adc_list)
        .par_iter()
        .map(|&(allocator, adc_bits, snr_db)| {
            let links = channels
                .iter()
                .map(|ch| PreparedLink::new(config, ch, allocator, adc_bits, snr_db))
                .collect::<Result<Vec<_>>>()?;
            let n = links.len() as f64;
            Ok(PredictionRow {
                allocator,
                adc_bits,
                snr_db,
                s_value: links.iter().map(|l| l.prediction.s).sum::<f64>() / n,
                ber_analytic: links.iter().map(|l| l.prediction.ber).sum::<f64>() / n,
                mse_analytic: links.iter().map(|l| l.prediction.mse_per_mode()).sum::<f64>() / n,
                converged: links.iter().all(|l| l.allocation.converged),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.allocator
            .cmp(&b.allocator)
            .then(adc_order(a.adc_bits, b.adc_bits))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    Ok(rows)
}

pub fn write_predictions<W: Write>(mut w: W, fingerprint: &str, rows: &[PredictionRow]) -> std::io::Result<()> {
    writeln!(w, "{PREDICTION_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{fingerprint},{},{},{},{},{},{},{}",
            r.allocator,
            r.adc_bits,
            fmt_f64(r.snr_db),
            fmt_f64(r.s_value),
            fmt_f64(r.ber_analytic),
            fmt_f64(r.mse_analytic),
            r.converged
        )?;
    }
    Ok(())
}
