//! End-to-end consistency of the link pipeline: Monte-Carlo engines against
//! exact per-mode error rates, the MSE prediction, and channel statistics.

#![allow(clippy::field_reassign_with_default)]

use eigenadc::analysis::{q_function, qam_gain};
use eigenadc::harness::{generate_channels, sweep_channels, PreparedLink, SimMode, TrialResult};
use eigenadc::poweralloc::Allocator;
use eigenadc::quantizer::PqnModel;
use eigenadc::svchannel::ChannelGenerator;
use eigenadc::{AdcBits, SimConfig, SvParams};

fn small_config() -> SimConfig {
    let mut config = SimConfig::default();
    config.subcarriers = 64;
    config.cp_len = 16;
    config.taps = 16;
    config.sv.sample_period_ns = 3.2;
    config.seed = 31;
    config.min_errors = 5_000;
    config
}

/// Exact Gray-coded 16-QAM bit error rate averaged over the modes of every channel.
fn exact_gray_ber(config: &SimConfig, row: &TrialResult, channels: &[eigenadc::svchannel::DiscreteChannel]) -> f64 {
    assert_eq!(config.qam_order, 16);
    let mut sum = 0.0;
    let mut n = 0.0;
    for ch in channels {
        let link = PreparedLink::new(config, ch, row.allocator, row.adc_bits, row.snr_db).unwrap();
        for s in &link.prediction.sinr {
            let a = (qam_gain(16) * s).sqrt();
            sum += 0.75 * q_function(a) + 0.5 * q_function(3.0 * a) - 0.25 * q_function(5.0 * a);
            n += 1.0;
        }
    }
    sum / n
}

fn check_against_exact(config: &SimConfig, tolerance_se: f64) {
    let channels = generate_channels(config, 6).unwrap();
    let table = sweep_channels(
        config,
        &channels,
        &[10.0, 25.0],
        &[Allocator::Eepa, Allocator::Aoepa],
        &[AdcBits::Finite(3), AdcBits::Full],
    )
    .unwrap();
    for row in &table.rows {
        let exact = exact_gray_ber(config, row, &channels);
        let z = (row.ber_mc - exact).abs() / row.ber_stderr;
        assert!(
            z < tolerance_se,
            "{} {} {} dB: mc {:.4e} exact {exact:.4e} z {z:.2}",
            row.allocator,
            row.adc_bits,
            row.snr_db,
            row.ber_mc
        );
    }
}

#[test]
fn pqn_mode_matches_exact_mode_ber() {
    let mut config = small_config();
    config.mode = SimMode::Pqn;
    check_against_exact(&config, 4.0);
}

#[test]
fn waveform_mode_matches_exact_ber_under_uniform_step_noise() {
    let mut config = small_config();
    config.mode = SimMode::Waveform;
    config.pqn_model = PqnModel::UniformStep;
    check_against_exact(&config, 4.0);
}

#[test]
fn waveform_quantization_is_worse_than_the_published_constant_predicts() {
    let mut config = small_config();
    config.mode = SimMode::Waveform;
    let channels = generate_channels(&config, 6).unwrap();
    let table = sweep_channels(&config, &channels, &[25.0], &[Allocator::Eepa], &[AdcBits::Finite(3)]).unwrap();
    let row = &table.rows[0];
    let exact = exact_gray_ber(&config, row, &channels);
    assert!(
        row.ber_mc > exact + 5.0 * row.ber_stderr,
        "mc {} exact {exact}",
        row.ber_mc
    );
}

#[test]
fn mse_prediction_matches_pqn_monte_carlo() {
    let mut config = small_config();
    config.mode = SimMode::Pqn;
    config.trials = 200_000;
    config.min_errors = u64::MAX;
    let channels = generate_channels(&config, 4).unwrap();
    let table = sweep_channels(
        &config,
        &channels,
        &[15.0, 30.0],
        &Allocator::ALL,
        &[AdcBits::Finite(4), AdcBits::Full],
    )
    .unwrap();
    for row in &table.rows {
        let rel = (row.mse_mc - row.mse_analytic).abs() / row.mse_analytic;
        assert!(
            rel < 0.03,
            "{} {} {} dB: mse mc {} analytic {}",
            row.allocator,
            row.adc_bits,
            row.snr_db,
            row.mse_mc,
            row.mse_analytic
        );
    }
}

#[test]
fn full_resolution_waveform_and_pqn_modes_agree() {
    let mut config = small_config();
    let channels = generate_channels(&config, 4).unwrap();
    let mut rows = Vec::new();
    for mode in [SimMode::Waveform, SimMode::Pqn] {
        config.mode = mode;
        rows.push(
            sweep_channels(&config, &channels, &[12.0], &[Allocator::Aoepa], &[AdcBits::Full])
                .unwrap()
                .rows
                .remove(0),
        );
    }
    let se = (rows[0].ber_stderr.powi(2) + rows[1].ber_stderr.powi(2)).sqrt();
    assert!((rows[0].ber_mc - rows[1].ber_mc).abs() < 4.0 * se);
}

#[test]
fn ensemble_channel_energy_is_unit() {
    let generator = ChannelGenerator::new(&SvParams::default(), 64).unwrap();
    let n = 4_000;
    let mean: f64 = (0..n)
        .map(|i| {
            let d = generator.pair(1_000 + i).unwrap();
            d.taps.iter().map(|t| t.norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        / n as f64;
    // lognormal fading gives a heavy tail, so the tolerance is generous
    assert!((mean - 1.0).abs() < 0.1, "mean energy {mean}");
}

/// Window of 64 taps at 0.4 ns keeps nearly all energy in 99% of realizations.
///
/// With clusters arriving every 27 ns on average and decaying over 21 ns, a
/// 25.6 ns window cannot hold that claim; the test records the measurement.
#[test]
#[ignore = "not attainable with these arrival and decay statistics"]
fn dropped_energy_is_small_in_a_64_tap_window() {
    let generator = ChannelGenerator::new(&SvParams::default(), 64).unwrap();
    let n = 10_000;
    let small = (0..n)
        .filter(|&i| generator.pair(50_000 + i).unwrap().dropped_fraction < 1e-3)
        .count();
    let share = small as f64 / n as f64;
    println!("share of realizations with dropped fraction < 1e-3: {share:.4}");
    assert!(share >= 0.99);
}
