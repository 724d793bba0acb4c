//! Simulation parameters and their flat `key=value` text form.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::SimMode;
use crate::poweralloc::OepaForm;
use crate::quantizer::PqnModel;

/// ADC resolution in bits per real dimension, or an ideal converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdcBits {
    Finite(u32),
    Full,
}

impl AdcBits {
    pub fn bits(self) -> Option<u32> {
        match self {
            AdcBits::Finite(b) => Some(b),
            AdcBits::Full => None,
        }
    }

    pub fn is_full(self) -> bool {
        matches!(self, AdcBits::Full)
    }
}

impl fmt::Display for AdcBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdcBits::Finite(b) => write!(f, "{b}"),
            AdcBits::Full => f.write_str("full"),
        }
    }
}

impl FromStr for AdcBits {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(AdcBits::Full);
        }
        let b: u32 = s.parse().map_err(|_| format!("expected 1..=16 or `full`, got `{s}`"))?;
        if (1..=16).contains(&b) {
            Ok(AdcBits::Finite(b))
        } else {
            Err(format!("bit count {b} outside 1..=16"))
        }
    }
}

/// Saleh-Valenzuela clustered multipath statistics. Times in nanoseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SvParams {
    /// Cluster arrival rate Λ (1/ns).
    pub cluster_rate: f64,
    /// Ray arrival rate λ (1/ns).
    pub ray_rate: f64,
    /// Cluster power decay constant Γ (ns).
    pub cluster_decay: f64,
    /// Ray power decay constant γ (ns).
    pub ray_decay: f64,
    /// Cluster lognormal shadowing standard deviation (dB).
    pub cluster_sigma_db: f64,
    /// Ray lognormal fading standard deviation (dB).
    pub ray_sigma_db: f64,
    pub mean_clusters: f64,
    pub mean_rays: f64,
    /// Baseband sample period T_s/N (ns).
    pub sample_period_ns: f64,
}

impl Default for SvParams {
    fn default() -> Self {
        SvParams {
            cluster_rate: 0.037,
            ray_rate: 0.641,
            cluster_decay: 21.1,
            ray_decay: 8.85,
            cluster_sigma_db: 3.01,
            ray_sigma_db: 7.69,
            mean_clusters: 3.0,
            mean_rays: 5.0,
            sample_period_ns: 204.8 / 512.0,
        }
    }
}

impl SvParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cluster_rate", self.cluster_rate),
            ("ray_rate", self.ray_rate),
            ("cluster_decay", self.cluster_decay),
            ("ray_decay", self.ray_decay),
            ("sample_period_ns", self.sample_period_ns),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {value}")));
            }
        }
        for (key, value) in [
            ("cluster_sigma_db", self.cluster_sigma_db),
            ("ray_sigma_db", self.ray_sigma_db),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(key, format!("must be nonnegative, got {value}")));
            }
        }
        for (key, value) in [("mean_clusters", self.mean_clusters), ("mean_rays", self.mean_rays)] {
            if !(value.is_finite() && value >= 1.0) {
                return Err(Error::config(key, format!("must be at least 1, got {value}")));
            }
        }
        Ok(())
    }
}

/// Complete configuration of a link simulation.
///
/// The stream count `L = min(n_t, n_r)` is always derived through
/// [`SimConfig::streams`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Subcarrier count N.
    pub subcarriers: usize,
    /// Cyclic-prefix length in samples.
    pub cp_len: usize,
    /// Impulse-response length per antenna pair; at most `cp_len`.
    pub taps: usize,
    /// Square QAM order M.
    pub qam_order: u32,
    /// Noise variance ξ² per complex sample.
    pub noise_variance: f64,
    pub adc_bits: AdcBits,
    /// AGC backoff α.
    pub agc_alpha: f64,
    pub pqn_model: PqnModel,
    pub oepa_form: OepaForm,
    pub sv: SvParams,
    /// Monte-Carlo budget in QAM symbols per result row.
    pub trials: u64,
    /// Channel realizations per sweep.
    pub channels: usize,
    /// Bit errors after which a result row stops early.
    pub min_errors: u64,
    pub mode: SimMode,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_t: 2,
            n_r: 2,
            subcarriers: 512,
            cp_len: 64,
            taps: 64,
            qam_order: 16,
            noise_variance: 0.01,
            adc_bits: AdcBits::Full,
            agc_alpha: 0.1,
            pqn_model: PqnModel::Nominal,
            oepa_form: OepaForm::Stationary,
            sv: SvParams::default(),
            trials: 2_000_000,
            channels: 20,
            min_errors: 200,
            mode: SimMode::Waveform,
            seed: 1,
        }
    }
}

/// Keys in canonical order. Used for echoing and fingerprinting.
pub const CONFIG_KEYS: &[&str] = &[
    "n_t",
    "n_r",
    "N",
    "L_cp",
    "taps",
    "M",
    "noise_variance",
    "adc_bits",
    "agc_alpha",
    "pqn_model",
    "oepa_form",
    "cluster_rate",
    "ray_rate",
    "cluster_decay",
    "ray_decay",
    "cluster_sigma_db",
    "ray_sigma_db",
    "mean_clusters",
    "mean_rays",
    "sample_period_ns",
    "trials",
    "channels",
    "min_errors",
    "mode",
    "seed",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| Error::config(key, format!("cannot parse `{}`: {e}", value.trim())))
}

impl SimConfig {
    /// L = min(n_t, n_r).
    pub fn streams(&self) -> usize {
        self.n_t.min(self.n_r)
    }

    /// Transmit power budget N·L.
    pub fn power_budget(&self) -> f64 {
        (self.subcarriers * self.streams()) as f64
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.qam_order.trailing_zeros()
    }

    /// Sets one key from its text value without validating cross-key constraints.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_t" => self.n_t = parse_value(key, value)?,
            "n_r" => self.n_r = parse_value(key, value)?,
            "N" => self.subcarriers = parse_value(key, value)?,
            "L_cp" => {
                let cp: usize = parse_value(key, value)?;
                // taps follow the prefix unless set explicitly afterwards
                if self.taps == self.cp_len {
                    self.taps = cp;
                }
                self.cp_len = cp;
            }
            "taps" => self.taps = parse_value(key, value)?,
            "M" => self.qam_order = parse_value(key, value)?,
            "noise_variance" => self.noise_variance = parse_value(key, value)?,
            "adc_bits" => self.adc_bits = parse_value(key, value)?,
            "agc_alpha" => self.agc_alpha = parse_value(key, value)?,
            "pqn_model" => self.pqn_model = parse_value(key, value)?,
            "oepa_form" => self.oepa_form = parse_value(key, value)?,
            "cluster_rate" => self.sv.cluster_rate = parse_value(key, value)?,
            "ray_rate" => self.sv.ray_rate = parse_value(key, value)?,
            "cluster_decay" => self.sv.cluster_decay = parse_value(key, value)?,
            "ray_decay" => self.sv.ray_decay = parse_value(key, value)?,
            "cluster_sigma_db" => self.sv.cluster_sigma_db = parse_value(key, value)?,
            "ray_sigma_db" => self.sv.ray_sigma_db = parse_value(key, value)?,
            "mean_clusters" => self.sv.mean_clusters = parse_value(key, value)?,
            "mean_rays" => self.sv.mean_rays = parse_value(key, value)?,
            "sample_period_ns" => self.sv.sample_period_ns = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "channels" => self.channels = parse_value(key, value)?,
            "min_errors" => self.min_errors = parse_value(key, value)?,
            "mode" => self.mode = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Checks every constraint; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 {
            return Err(Error::config("n_t", "must be at least 1"));
        }
        if self.n_r == 0 {
            return Err(Error::config("n_r", "must be at least 1"));
        }
        if self.subcarriers < 2 || !self.subcarriers.is_power_of_two() {
            return Err(Error::config(
                "N",
                format!("must be a power of two (>= 2), got {}", self.subcarriers),
            ));
        }
        if self.cp_len == 0 || self.cp_len >= self.subcarriers {
            return Err(Error::config(
                "L_cp",
                format!("must satisfy 1 <= L_cp < N, got {}", self.cp_len),
            ));
        }
        if self.taps == 0 || self.taps > self.cp_len {
            return Err(Error::config(
                "taps",
                format!("must satisfy 1 <= taps <= L_cp, got {}", self.taps),
            ));
        }
        if !matches!(self.qam_order, 4 | 16 | 64) {
            return Err(Error::config(
                "M",
                format!("must be one of 4, 16, 64, got {}", self.qam_order),
            ));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            return Err(Error::config("noise_variance", "must be positive"));
        }
        if !(self.agc_alpha.is_finite() && self.agc_alpha > 0.0) {
            return Err(Error::config("agc_alpha", "must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.channels == 0 {
            return Err(Error::config("channels", "must be at least 1"));
        }
        if self.min_errors == 0 {
            return Err(Error::config("min_errors", "must be at least 1"));
        }
        self.sv.validate()
    }

    /// Parses `key=value` lines ('#' starts a comment) on top of the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut config = SimConfig::default();
        let lines = config.apply_kv_str(text)?;
        config.validate_reporting_lines(&lines)?;
        Ok(config)
    }

    /// Applies `key=value` lines without cross-key validation and returns the
    /// line on which each key was last set.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<HashMap<String, usize>> {
        let mut lines = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                key: line.to_string(),
                line: Some(line_no),
                message: "expected `key=value`".into(),
            })?;
            let key = key.trim();
            self.set(key, value).map_err(|e| with_line(e, line_no))?;
            lines.insert(key.to_string(), line_no);
        }
        Ok(lines)
    }

    /// [`SimConfig::validate`], attaching the source line of the offending key
    /// when it is known.
    pub fn validate_reporting_lines(&self, lines: &HashMap<String, usize>) -> Result<()> {
        self.validate().map_err(|e| match &e {
            Error::Config { key, .. } => match lines.get(key) {
                Some(&line) => with_line(e, line),
                None => e,
            },
            _ => e,
        })
    }

    /// Canonical `key=value` text with every key resolved.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            out.push_str(key);
            out.push('=');
            out.push_str(&self.value_string(key));
            out.push('\n');
        }
        out
    }

    fn value_string(&self, key: &str) -> String {
        match key {
            "n_t" => self.n_t.to_string(),
            "n_r" => self.n_r.to_string(),
            "N" => self.subcarriers.to_string(),
            "L_cp" => self.cp_len.to_string(),
            "taps" => self.taps.to_string(),
            "M" => self.qam_order.to_string(),
            "noise_variance" => format!("{:?}", self.noise_variance),
            "adc_bits" => self.adc_bits.to_string(),
            "agc_alpha" => format!("{:?}", self.agc_alpha),
            "pqn_model" => self.pqn_model.to_string(),
            "oepa_form" => self.oepa_form.to_string(),
            "cluster_rate" => format!("{:?}", self.sv.cluster_rate),
            "ray_rate" => format!("{:?}", self.sv.ray_rate),
            "cluster_decay" => format!("{:?}", self.sv.cluster_decay),
            "ray_decay" => format!("{:?}", self.sv.ray_decay),
            "cluster_sigma_db" => format!("{:?}", self.sv.cluster_sigma_db),
            "ray_sigma_db" => format!("{:?}", self.sv.ray_sigma_db),
            "mean_clusters" => format!("{:?}", self.sv.mean_clusters),
            "mean_rays" => format!("{:?}", self.sv.mean_rays),
            "sample_period_ns" => format!("{:?}", self.sv.sample_period_ns),
            "trials" => self.trials.to_string(),
            "channels" => self.channels.to_string(),
            "min_errors" => self.min_errors.to_string(),
            "mode" => self.mode.to_string(),
            "seed" => self.seed.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// First 16 hex digits of SHA-256 over the canonical text.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_kv_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn with_line(err: Error, line_no: usize) -> Error {
    match err {
        Error::Config { key, message, .. } => Error::Config {
            key,
            line: Some(line_no),
            message,
        },
        other => other,
    }
}

/// Noise variance for an SNR in dB under unit channel and symbol energy.
pub fn noise_variance_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}
