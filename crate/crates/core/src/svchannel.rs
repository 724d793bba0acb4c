//! Saleh-Valenzuela clustered multipath channels.
//!
//! Clusters arrive as a Poisson process with rate Λ, rays within a cluster
//! with rate λ. The mean-square ray power decays as
//! `exp(−T_c/Γ) · exp(−τ/γ)`; amplitudes carry lognormal cluster shadowing
//! and ray fading, and phases are uniform. Continuous tap sets are mapped to
//! fixed-length sampled impulse responses by nearest-bin delay quantization.

use std::f64::consts::{LN_10, PI};
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::error::{Error, Result};
use crate::params::SvParams;
use crate::seed::{derive_stream_seed, stream_rng, tags, StreamRng};

/// Number of delay draws used to calibrate the reference power.
const CALIBRATION_DRAWS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    /// Delay relative to the cluster arrival (ns).
    pub delay_ns: f64,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Cluster arrival time T_c (ns).
    pub delay_ns: f64,
    pub rays: Vec<Ray>,
}

/// One continuous-time channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TapSet {
    pub clusters: Vec<Cluster>,
}

impl TapSet {
    /// Iterates `(absolute delay, gain)` over every ray.
    pub fn rays(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.clusters
            .iter()
            .flat_map(|c| c.rays.iter().map(move |r| (c.delay_ns + r.delay_ns, r.gain)))
    }

    pub fn energy(&self) -> f64 {
        self.rays().map(|(_, g)| g.norm_sqr()).sum()
    }
}

/// Mean-square power of a ray relative to `E|g_{0,0}|²`.
pub fn mean_ray_power(params: &SvParams, cluster_delay_ns: f64, ray_delay_ns: f64) -> f64 {
    (-cluster_delay_ns / params.cluster_decay).exp() * (-ray_delay_ns / params.ray_decay).exp()
}

/// Ray gain from its delays, the lognormal fading terms (dB) and the phase.
///
/// The lognormal mean is compensated so that `E|g|²` equals
/// [`mean_ray_power`] when the fading terms are zero-mean normals with the
/// standard deviations in `params`.
pub fn ray_gain(params: &SvParams, cluster_delay_ns: f64, ray_delay_ns: f64, fading_db: f64, phase: f64) -> Complex64 {
    let var_db = params.cluster_sigma_db.powi(2) + params.ray_sigma_db.powi(2);
    let mean_correction_db = var_db * LN_10 / 20.0;
    let power =
        mean_ray_power(params, cluster_delay_ns, ray_delay_ns) * 10f64.powf((fading_db - mean_correction_db) / 10.0);
    Complex64::from_polar(power.sqrt(), phase)
}

/// Draws a single ray gain with fresh cluster and ray fading.
pub fn draw_ray_gain<R: Rng + ?Sized>(
    params: &SvParams,
    cluster_delay_ns: f64,
    ray_delay_ns: f64,
    rng: &mut R,
) -> Complex64 {
    let cluster_db = normal_db(params.cluster_sigma_db, rng);
    let ray_db = normal_db(params.ray_sigma_db, rng);
    let phase = rng.random_range(0.0..2.0 * PI);
    ray_gain(params, cluster_delay_ns, ray_delay_ns, cluster_db + ray_db, phase)
}

fn normal_db<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> f64 {
    if sigma_db == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma_db).expect("finite sigma").sample(rng)
    }
}

/// `1 + Poisson(mean − 1)`: at least one, with the requested mean.
fn count_at_least_one<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    let extra = mean - 1.0;
    if extra <= 0.0 {
        1
    } else {
        let k: f64 = Poisson::new(extra).expect("positive mean").sample(rng);
        1 + k as usize
    }
}

#[derive(Clone, Copy)]
enum Arrival {
    Cluster { t_c: f64 },
    Ray { t_c: f64, tau: f64 },
}

struct DelayDraws {
    cluster_gap: Exp<f64>,
    ray_gap: Exp<f64>,
}

impl DelayDraws {
    fn new(params: &SvParams) -> Self {
        DelayDraws {
            cluster_gap: Exp::new(params.cluster_rate).expect("positive rate"),
            ray_gap: Exp::new(params.ray_rate).expect("positive rate"),
        }
    }

    /// Reports every cluster of one realization, followed by its rays.
    fn walk<R: Rng + ?Sized>(&self, params: &SvParams, rng: &mut R, mut on: impl FnMut(&mut R, Arrival)) {
        let clusters = count_at_least_one(params.mean_clusters, rng);
        let mut t_c = 0.0;
        for c in 0..clusters {
            if c > 0 {
                t_c += self.cluster_gap.sample(rng);
            }
            on(rng, Arrival::Cluster { t_c });
            let rays = count_at_least_one(params.mean_rays, rng);
            let mut tau = 0.0;
            for b in 0..rays {
                if b > 0 {
                    tau += self.ray_gap.sample(rng);
                }
                on(rng, Arrival::Ray { t_c, tau });
            }
        }
    }
}

/// Draws one continuous-time realization with `E|g_{0,0}|² = 1`.
///
/// Cluster and ray counts are `1 + Poisson(mean − 1)`; the first cluster
/// arrives at `T_0 = 0` and each cluster's first ray at `τ = 0`.
pub fn generate_sv_realization(params: &SvParams, seed: u64) -> TapSet {
    let mut rng = stream_rng(seed);
    let draws = DelayDraws::new(params);
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut cluster_db = 0.0;
    draws.walk(params, &mut rng, |rng, arrival| match arrival {
        Arrival::Cluster { t_c } => {
            cluster_db = normal_db(params.cluster_sigma_db, rng);
            clusters.push(Cluster {
                delay_ns: t_c,
                rays: Vec::new(),
            });
        }
        Arrival::Ray { t_c, tau } => {
            let ray_db = normal_db(params.ray_sigma_db, rng);
            let phase = rng.random_range(0.0..2.0 * PI);
            let gain = ray_gain(params, t_c, tau, cluster_db + ray_db, phase);
            clusters
                .last_mut()
                .expect("cluster pushed first")
                .rays
                .push(Ray { delay_ns: tau, gain });
        }
    });
    TapSet { clusters }
}

/// A sampled impulse response and the energy fraction that fell past its end.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretized {
    pub taps: Vec<Complex64>,
    pub dropped_fraction: f64,
}

fn delay_bin(delay_ns: f64, sample_period_ns: f64) -> usize {
    (delay_ns / sample_period_ns).round() as usize
}

/// Accumulates every ray into the tap nearest its absolute delay.
///
/// Rays landing at or beyond tap `n_taps` are dropped; their share of the
/// continuous-time energy is reported in `dropped_fraction`.
pub fn discretize(taps: &TapSet, sample_period_ns: f64, n_taps: usize) -> Result<Discretized> {
    if !(sample_period_ns > 0.0) || n_taps == 0 {
        return Err(Error::InvalidArgument(format!(
            "sample period {sample_period_ns} ns / {n_taps} taps"
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n_taps];
    let mut kept_rays = 0usize;
    let mut total = 0.0;
    let mut dropped = 0.0;
    for (delay, gain) in taps.rays() {
        let energy = gain.norm_sqr();
        total += energy;
        let bin = delay_bin(delay, sample_period_ns);
        if bin < n_taps {
            out[bin] += gain;
            kept_rays += 1;
        } else {
            dropped += energy;
        }
    }
    if kept_rays == 0 {
        return Err(Error::EmptyWindow { taps: n_taps });
    }
    Ok(Discretized {
        taps: out,
        dropped_fraction: if total > 0.0 { dropped / total } else { 0.0 },
    })
}

/// Generates discretized S-V channels whose ensemble-average energy per
/// antenna pair is one.
///
/// Phases are independent and uniform, so the expected energy of a tap bin is
/// the sum of the expected ray powers that land in it. The reference power
/// `E|g_{0,0}|²` is the reciprocal of the expected in-window sum of
/// [`mean_ray_power`], estimated once from delay draws alone.
#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    params: SvParams,
    n_taps: usize,
    power_scale: f64,
}

impl ChannelGenerator {
    pub fn new(params: &SvParams, n_taps: usize) -> Result<Self> {
        params.validate()?;
        if n_taps == 0 {
            return Err(Error::InvalidArgument("tap count must be positive".into()));
        }
        let expected = expected_window_power(params, n_taps);
        Ok(ChannelGenerator {
            params: params.clone(),
            n_taps,
            power_scale: 1.0 / expected,
        })
    }

    pub fn params(&self) -> &SvParams {
        &self.params
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    /// The calibrated `E|g_{0,0}|²`.
    pub fn power_scale(&self) -> f64 {
        self.power_scale
    }

    /// One antenna pair.
    pub fn pair(&self, seed: u64) -> Result<Discretized> {
        let taps = generate_sv_realization(&self.params, seed);
        let mut d = discretize(&taps, self.params.sample_period_ns, self.n_taps)?;
        let amp = self.power_scale.sqrt();
        d.taps.iter_mut().for_each(|t| *t *= amp);
        Ok(d)
    }

    /// All `n_rx × n_tx` pairs, each from its own stream of `seed`.
    pub fn realize(&self, n_rx: usize, n_tx: usize, seed: u64) -> Result<DiscreteChannel> {
        let mut responses = Vec::with_capacity(n_rx * n_tx);
        let mut dropped = Vec::with_capacity(n_rx * n_tx);
        for pair in 0..n_rx * n_tx {
            let d = self.pair(derive_stream_seed(seed, pair as u64))?;
            responses.push(d.taps);
            dropped.push(d.dropped_fraction);
        }
        let mut ch = DiscreteChannel::new(n_rx, n_tx, responses)?;
        ch.dropped = dropped;
        Ok(ch)
    }
}

fn expected_window_power(params: &SvParams, n_taps: usize) -> f64 {
    let mut rng: StreamRng = stream_rng(tags::CALIBRATION);
    let draws = DelayDraws::new(params);
    let mut acc = 0.0;
    for _ in 0..CALIBRATION_DRAWS {
        draws.walk(params, &mut rng, |_, arrival| {
            if let Arrival::Ray { t_c, tau } = arrival {
                if delay_bin(t_c + tau, params.sample_period_ns) < n_taps {
                    acc += mean_ray_power(params, t_c, tau);
                }
            }
        });
    }
    acc / CALIBRATION_DRAWS as f64
}

/// Sampled impulse responses for every (receive, transmit) antenna pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    n_rx: usize,
    n_tx: usize,
    n_taps: usize,
    /// Indexed `rx * n_tx + tx`.
    responses: Vec<Vec<Complex64>>,
    dropped: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(n_rx: usize, n_tx: usize, responses: Vec<Vec<Complex64>>) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 || responses.len() != n_rx * n_tx {
            return Err(Error::InvalidArgument(format!(
                "{n_rx}x{n_tx} channel needs {} responses, got {}",
                n_rx * n_tx,
                responses.len()
            )));
        }
        let n_taps = responses[0].len();
        if n_taps == 0 || responses.iter().any(|r| r.len() != n_taps) {
            return Err(Error::InvalidArgument(
                "impulse responses must share a nonzero length".into(),
            ));
        }
        if responses
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite channel tap".into()));
        }
        Ok(DiscreteChannel {
            n_rx,
            n_tx,
            n_taps,
            dropped: vec![0.0; responses.len()],
            responses,
        })
    }

    /// `h_{ji} = δ_{ji}` single-tap channel padded to `n_taps`.
    pub fn identity(n_rx: usize, n_tx: usize, n_taps: usize) -> Self {
        let responses = (0..n_rx * n_tx)
            .map(|p| {
                let mut h = vec![Complex64::new(0.0, 0.0); n_taps];
                if p / n_tx == p % n_tx {
                    h[0] = Complex64::new(1.0, 0.0);
                }
                h
            })
            .collect();
        DiscreteChannel::new(n_rx, n_tx, responses).expect("valid identity")
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn response(&self, rx: usize, tx: usize) -> &[Complex64] {
        &self.responses[rx * self.n_tx + tx]
    }

    pub fn pair_energy(&self, rx: usize, tx: usize) -> f64 {
        self.response(rx, tx).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Dropped-energy fraction per pair, zero for channels not built by a generator.
    pub fn dropped_fraction(&self, rx: usize, tx: usize) -> f64 {
        self.dropped[rx * self.n_tx + tx]
    }

    /// Writes one row per tap with `re`/`im` columns per antenna pair.
    pub fn write_csv<W: Write>(&self, mut w: W, fingerprint: &str) -> std::io::Result<()> {
        write!(w, "config_hash,tap")?;
        for rx in 0..self.n_rx {
            for tx in 0..self.n_tx {
                write!(w, ",h_r{rx}_t{tx}_re,h_r{rx}_t{tx}_im")?;
            }
        }
        writeln!(w)?;
        for tap in 0..self.n_taps {
            write!(w, "{fingerprint},{tap}")?;
            for h in &self.responses {
                write!(w, ",{:.16e},{:.16e}", h[tap].re, h[tap].im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`DiscreteChannel::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty channel file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 4 || cols[0] != "config_hash" || cols[1] != "tap" || !(cols.len() - 2).is_multiple_of(2) {
            return Err(Error::Parse(format!("unexpected channel header `{header}`")));
        }
        let names: Vec<(usize, usize)> = cols[2..]
            .iter()
            .step_by(2)
            .map(|name| parse_pair_name(name).ok_or_else(|| Error::Parse(format!("bad column `{name}`"))))
            .collect::<Result<_>>()?;
        let n_rx = names.iter().map(|p| p.0 + 1).max().unwrap_or(0);
        let n_tx = names.iter().map(|p| p.1 + 1).max().unwrap_or(0);
        let pairs = names.len();
        let ordered = names.iter().enumerate().all(|(k, &p)| p == (k / n_tx, k % n_tx));
        if n_rx * n_tx != pairs || !ordered {
            return Err(Error::Parse("antenna-pair columns incomplete or out of order".into()));
        }
        let mut responses = vec![Vec::new(); pairs];
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse(format!("row {} has {} fields", row + 1, fields.len())));
            }
            for p in 0..pairs {
                let re: f64 = parse_f64(fields[2 + 2 * p])?;
                let im: f64 = parse_f64(fields[3 + 2 * p])?;
                responses[p].push(Complex64::new(re, im));
            }
        }
        DiscreteChannel::new(n_rx, n_tx, responses)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

fn parse_pair_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("h_r")?.strip_suffix("_re")?;
    let (rx, tx) = rest.split_once("_t")?;
    Some((rx.parse().ok()?, tx.parse().ok()?))
}
