//! Command-line front end: configuration loading, subcommand dispatch and
//! CSV emission.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::eigenbeam::{assemble_freq_channel, eigen_decompose};
use crate::error::{Error, Result};
use crate::harness::{generate_channels, predict, sweep_channels, write_predictions};
use crate::params::{noise_variance_from_snr_db, AdcBits, SimConfig};
use crate::poweralloc::{allocate, AllocContext, Allocator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "eigenadc",
    version,
    about = "Eigenmode beamforming and power allocation for MIMO-OFDM links with low-resolution ADCs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo BER/MSE sweep; writes results.csv and plot.csv.
    Simulate(CommonArgs),
    /// Per-mode power allocation for one channel; writes allocation.csv.
    Allocate(CommonArgs),
    /// Analytic BER/MSE predictions; writes predictions.csv.
    Analyze(CommonArgs),
    /// Sampled channel taps; writes channel.csv.
    Channel(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list or start:step:stop, in dB.
    #[arg(long)]
    snr: Option<String>,
    /// Comma list of eepa, aoepa, oepa, mmse.
    #[arg(long)]
    alloc: Option<String>,
    /// Comma list of 1..16 or full.
    #[arg(long)]
    bits: Option<String>,
    /// Symbol budget per result row.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    /// Channel realization used by `allocate` and `channel`.
    #[arg(long, default_value_t = 0)]
    channel_index: usize,
    /// Extra configuration overrides as key=value.
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Allocate,
    Analyze,
    Channel,
}

/// A parsed invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliCommand {
    pub kind: CommandKind,
    pub config_path: Option<PathBuf>,
    /// Applied in order after the configuration file.
    pub overrides: Vec<(String, String)>,
    pub out: PathBuf,
    pub snr_db: Option<Vec<f64>>,
    pub allocators: Option<Vec<Allocator>>,
    pub adc_bits: Option<Vec<AdcBits>>,
    pub channel_index: usize,
}

/// Usage problems detected after clap has run.
#[derive(Debug)]
pub struct UsageError(pub String);

impl CliCommand {
    pub fn parse_from<I, T>(args: I) -> std::result::Result<CliCommand, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args)?;
        let (kind, a) = match cli.command {
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::Allocate(a) => (CommandKind::Allocate, a),
            Command::Analyze(a) => (CommandKind::Analyze, a),
            Command::Channel(a) => (CommandKind::Channel, a),
        };
        let usage = |msg: String| clap::Error::raw(clap::error::ErrorKind::ValueValidation, msg + "\n");
        let mut overrides = Vec::new();
        for (key, value) in [
            ("seed", a.seed.map(|v| v.to_string())),
            ("trials", a.trials.map(|v| v.to_string())),
            ("channels", a.channels.map(|v| v.to_string())),
            ("mode", a.mode.clone()),
        ] {
            if let Some(v) = value {
                overrides.push((key.to_string(), v));
            }
        }
        for item in &a.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| usage(format!("expected key=value, got `{item}`")))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        let snr_db = a.snr.as_deref().map(parse_snr_list).transpose().map_err(usage)?;
        let allocators = a
            .alloc
            .as_deref()
            .map(parse_list::<Allocator>)
            .transpose()
            .map_err(usage)?;
        let adc_bits = a
            .bits
            .as_deref()
            .map(parse_list::<AdcBits>)
            .transpose()
            .map_err(usage)?;
        Ok(CliCommand {
            kind,
            config_path: a.config,
            overrides,
            out: a.out,
            snr_db,
            allocators,
            adc_bits,
            channel_index: a.channel_index,
        })
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<Vec<T>, String>>()?;
    if items.is_empty() {
        return Err(format!("empty list `{s}`"));
    }
    Ok(items)
}

/// `10,20,30` or `start:step:stop` (inclusive).
pub fn parse_snr_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let bad = |x: &str| format!("cannot parse SNR `{x}`");
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("SNR range must be start:step:stop, got `{s}`"));
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| bad(p)))
            .collect::<std::result::Result<_, _>>()?;
        let (start, step, stop) = (v[0], v[1], v[2]);
        if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
            return Err(format!("SNR range `{s}` needs step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 10_000 {
            return Err(format!("SNR range `{s}` has too many points"));
        }
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        parse_list::<f64>(s).and_then(|v| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(v)
            } else {
                Err(format!("SNR list `{s}` has non-finite entries"))
            }
        })
    }
}

/// Loads the configuration file (if any), applies `overrides` and validates.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    let mut lines = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config {
                key: "config".into(),
                line: None,
                message: format!("cannot read {}: {e}", p.display()),
            })?;
            config.apply_kv_str(&text)?
        }
        None => HashMap::new(),
    };
    for (key, value) in overrides {
        config.set(key, value)?;
        lines.remove(key);
    }
    config.validate_reporting_lines(&lines)?;
    Ok(config)
}

fn snr_of(config: &SimConfig) -> f64 {
    -10.0 * config.noise_variance.log10()
}

/// Files produced by one command, held in memory until all succeed.
struct Outputs(Vec<(&'static str, String)>);

impl Outputs {
    fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, content) in self.0 {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, content) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(e.into());
            }
            written.push(path);
        }
        Ok(written)
    }
}

/// Runs a parsed command and returns the files it wrote.
pub fn execute(cmd: &CliCommand) -> Result<Vec<PathBuf>> {
    let config = parse_config(cmd.config_path.as_deref(), &cmd.overrides)?;
    let fingerprint = config.fingerprint();
    let snr = cmd.snr_db.clone().unwrap_or_else(|| vec![snr_of(&config)]);
    let allocators = cmd.allocators.clone().unwrap_or_else(|| vec![Allocator::Aoepa]);
    let adc = cmd.adc_bits.clone().unwrap_or_else(|| vec![config.adc_bits]);
    let mut files = vec![("config.txt", config.to_kv_string())];

    match cmd.kind {
        CommandKind::Simulate => {
            let channels = generate_channels(&config, config.channels).map_err(|e| e.context("channel generation"))?;
            let table =
                sweep_channels(&config, &channels, &snr, &allocators, &adc).map_err(|e| e.context("simulation"))?;
            let mut results = Vec::new();
            table.write_csv(&mut results)?;
            let mut plot = Vec::new();
            table.write_plot_csv(&mut plot)?;
            files.push(("results.csv", utf8(results)));
            files.push(("plot.csv", utf8(plot)));
        }
        CommandKind::Analyze => {
            let channels = generate_channels(&config, config.channels).map_err(|e| e.context("channel generation"))?;
            let rows = predict(&config, &channels, &snr, &allocators, &adc).map_err(|e| e.context("prediction"))?;
            let mut buf = Vec::new();
            write_predictions(&mut buf, &fingerprint, &rows)?;
            files.push(("predictions.csv", utf8(buf)));
        }
        CommandKind::Allocate => {
            let channel = one_channel(&config, cmd.channel_index)?;
            let fc = assemble_freq_channel(&channel, config.subcarriers)?;
            let modes = eigen_decompose(&fc)?;
            let sv = modes.singular_values();
            let allocator = allocators[0];
            let ctx = AllocContext {
                noise_variance: noise_variance_from_snr_db(snr[0]),
                qam_order: config.qam_order,
                adc_bits: adc[0],
                alpha: config.agc_alpha,
                pqn_model: config.pqn_model,
                oepa_form: config.oepa_form,
                budget: config.power_budget(),
            };
            let p = allocate(allocator, &sv, &ctx).map_err(|e| e.context(format!("{allocator} allocation")))?;
            let mut out =
                String::from("config_hash,mode_index,subcarrier,stream,singular_value,power,cumulative_power\n");
            let mut cumulative = 0.0;
            for (k, (m, power)) in modes.modes().iter().zip(&p.powers).enumerate() {
                cumulative += power;
                out.push_str(&format!(
                    "{fingerprint},{k},{},{},{:.16e},{:.16e},{:.16e}\n",
                    m.subcarrier, m.stream, m.singular_value, power, cumulative
                ));
            }
            files.push(("allocation.csv", out));
        }
        CommandKind::Channel => {
            let channel = one_channel(&config, cmd.channel_index)?;
            let mut buf = Vec::new();
            channel.write_csv(&mut buf, &fingerprint)?;
            files.push(("channel.csv", utf8(buf)));
        }
    }
    Outputs(files).write(&cmd.out)
}

fn one_channel(config: &SimConfig, index: usize) -> Result<crate::svchannel::DiscreteChannel> {
    let mut channels = generate_channels(config, index + 1).map_err(|e| e.context("channel generation"))?;
    Ok(channels.swap_remove(index))
}

fn utf8(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).expect("CSV output is ASCII")
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

/// Full entry point: parses `args`, runs the command and reports on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cmd = match CliCommand::parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cmd) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
