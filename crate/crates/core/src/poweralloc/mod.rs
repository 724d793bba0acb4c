//! Eigenmode power allocation: equal (EEPA), approximate optimal (AOEPA),
//! optimal (OEPA) and MSE-minimizing (MMSE-PA).
//!
//! All allocators return a [`PowerAllocation`] whose entries follow the global
//! mode order of [`crate::eigenbeam::EigenModes`].

mod lambert;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub use lambert::lambert_w0;

use crate::analysis::qam_gain;
use crate::error::{Error, Result};
use crate::params::AdcBits;
use crate::quantizer::{pqn_constant, PqnModel};

/// Allowed excess over the power budget.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

const OEPA_TOL: f64 = 1e-8;
const OEPA_MAX_ITERS: usize = 200;
const BISECTION_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Allocator {
    Eepa,
    Aoepa,
    Oepa,
    Mmse,
}

impl Allocator {
    pub const ALL: [Allocator; 4] = [Allocator::Eepa, Allocator::Aoepa, Allocator::Oepa, Allocator::Mmse];
}

impl fmt::Display for Allocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Allocator::Eepa => "eepa",
            Allocator::Aoepa => "aoepa",
            Allocator::Oepa => "oepa",
            Allocator::Mmse => "mmse",
        })
    }
}

impl FromStr for Allocator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eepa" => Ok(Allocator::Eepa),
            "aoepa" => Ok(Allocator::Aoepa),
            "oepa" => Ok(Allocator::Oepa),
            "mmse" | "mmse-pa" | "mmse_pa" => Ok(Allocator::Mmse),
            other => Err(format!("unknown allocator `{other}` (eepa, aoepa, oepa, mmse)")),
        }
    }
}

/// Which OEPA condition to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OepaForm {
    /// Exact stationary point of `S` under the sum-power constraint.
    #[default]
    Stationary,
    /// The closed form as published, with its `ξ² + ξ_q²` factors and
    /// multiplier `Ω`.
    Printed,
}

impl fmt::Display for OepaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OepaForm::Stationary => "stationary",
            OepaForm::Printed => "printed",
        })
    }
}

impl FromStr for OepaForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "stationary" => Ok(OepaForm::Stationary),
            "printed" => Ok(OepaForm::Printed),
            other => Err(format!("expected `stationary` or `printed`, got `{other}`")),
        }
    }
}

/// Per-mode powers `P_k` with the budget they were sized for.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub budget: f64,
    /// False only when an iterative allocator stopped at its iteration cap.
    pub converged: bool,
    pub iterations: usize,
}

impl PowerAllocation {
    fn direct(powers: Vec<f64>, budget: f64) -> Self {
        PowerAllocation {
            powers,
            budget,
            converged: true,
            iterations: 0,
        }
    }

    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }
}

/// Everything besides the singular values that an allocator may need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocContext {
    pub noise_variance: f64,
    pub qam_order: u32,
    pub adc_bits: AdcBits,
    pub alpha: f64,
    pub pqn_model: PqnModel,
    pub oepa_form: OepaForm,
    pub budget: f64,
}

/// Runs `allocator` on the mode singular values.
pub fn allocate(allocator: Allocator, singular_values: &[f64], ctx: &AllocContext) -> Result<PowerAllocation> {
    check_singular_values(singular_values)?;
    match allocator {
        Allocator::Eepa => eepa(singular_values.len(), ctx.budget),
        Allocator::Aoepa => aoepa(singular_values, ctx.noise_variance, ctx.qam_order, ctx.budget),
        Allocator::Oepa => {
            let c = pqn_constant(ctx.adc_bits, ctx.alpha, ctx.pqn_model);
            oepa_with_c(
                singular_values,
                ctx.noise_variance,
                ctx.qam_order,
                c,
                ctx.oepa_form,
                ctx.budget,
            )
        }
        Allocator::Mmse => {
            let amplitudes = mmse_pa(singular_values, ctx.budget)?;
            Ok(PowerAllocation::direct(
                amplitudes.iter().map(|a| a * a).collect(),
                ctx.budget,
            ))
        }
    }
}

fn check_singular_values(d: &[f64]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Allocation("no eigenmodes to allocate".into()));
    }
    if let Some(bad) = d.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Allocation(format!(
            "singular values must be positive, got {bad}"
        )));
    }
    Ok(())
}

fn check_budget(budget: f64) -> Result<()> {
    if budget.is_finite() && budget > 0.0 {
        Ok(())
    } else {
        Err(Error::Allocation(format!(
            "power budget must be positive, got {budget}"
        )))
    }
}

/// Equal power `NL / count` on every mode.
pub fn eepa(mode_count: usize, budget: f64) -> Result<PowerAllocation> {
    if mode_count == 0 {
        return Err(Error::Allocation("no eigenmodes to allocate".into()));
    }
    check_budget(budget)?;
    Ok(PowerAllocation::direct(
        vec![budget / mode_count as f64; mode_count],
        budget,
    ))
}

/// Amplitudes `Δ_B` minimizing `Σ(Δ_B,l Δ_l − 1)²` subject to `ΣΔ_B,l² ≤ NL`.
///
/// When the zero-forcing amplitudes `1/Δ_l` fit the budget they are optimal
/// and returned as is; otherwise `Δ_B,l = Δ_l/(Δ_l² + μ)` with `μ > 0` chosen
/// so the budget is met.
pub fn mmse_pa(singular_values: &[f64], budget: f64) -> Result<Vec<f64>> {
    check_singular_values(singular_values)?;
    check_budget(budget)?;
    let zf: f64 = singular_values.iter().map(|d| 1.0 / (d * d)).sum();
    if zf <= budget {
        return Ok(singular_values.iter().map(|d| 1.0 / d).collect());
    }
    let energy = |mu: f64| -> f64 {
        singular_values
            .iter()
            .map(|d| {
                let a = d / (d * d + mu);
                a * a
            })
            .sum()
    };
    // energy(0) > budget and energy decreases to 0
    let mut hi = 1.0;
    while energy(hi) > budget {
        hi *= 2.0;
    }
    let mu = bisect(0.0, hi, |mu| energy(mu) > budget);
    let mut amplitudes: Vec<f64> = singular_values.iter().map(|d| d / (d * d + mu)).collect();
    let scale = (budget / amplitudes.iter().map(|a| a * a).sum::<f64>()).sqrt();
    amplitudes.iter_mut().for_each(|a| *a *= scale);
    Ok(amplitudes)
}

/// Closed-form approximate allocation: weights `W(g Δ⁴/ξ⁴)/Δ²` scaled to sum to NL.
pub fn aoepa(singular_values: &[f64], noise_variance: f64, qam_order: u32, budget: f64) -> Result<PowerAllocation> {
    check_singular_values(singular_values)?;
    check_budget(budget)?;
    if !(noise_variance > 0.0) {
        return Err(Error::Allocation(format!(
            "AOEPA needs a positive noise variance, got {noise_variance}"
        )));
    }
    let g = qam_gain(qam_order);
    let xi4 = noise_variance * noise_variance;
    let weights = singular_values
        .iter()
        .map(|d| {
            let d2 = d * d;
            Ok(lambert_w0(g * d2 * d2 / xi4)? / d2)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PowerAllocation::direct(normalize(weights, budget), budget))
}

fn normalize(weights: Vec<f64>, budget: f64) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| budget * w / total).collect()
}

/// OEPA for a finite-resolution ADC with the PQN constant `c` of the
/// configured model.
pub fn oepa(
    singular_values: &[f64],
    noise_variance: f64,
    qam_order: u32,
    bits: AdcBits,
    alpha: f64,
    form: OepaForm,
    budget: f64,
) -> Result<PowerAllocation> {
    let c = pqn_constant(bits, alpha, PqnModel::Nominal);
    oepa_with_c(singular_values, noise_variance, qam_order, c, form, budget)
}

/// OEPA for an explicit PQN constant `c` (zero for full precision).
///
/// Writing `D = (c+1)ξ² + ξ_q²` with `ξ_q² = c·mean(P_k Δ_k²)` and
/// `x_k = g P_k Δ_k² / D`, the stationary condition of `S` is
/// `x_k e^{x_k} = g²Δ_k⁴ / (8π D² (μ + aΔ_k²)²)` with
/// `a = c/(K D) Σ_j √x_j e^{−x_j/2} / (2√(2π))`. `D` and `a` are frozen while
/// `μ` is bisected to meet the budget, then refreshed from the new powers.
pub fn oepa_with_c(
    singular_values: &[f64],
    noise_variance: f64,
    qam_order: u32,
    c: f64,
    form: OepaForm,
    budget: f64,
) -> Result<PowerAllocation> {
    check_singular_values(singular_values)?;
    check_budget(budget)?;
    if !(noise_variance > 0.0) {
        return Err(Error::Allocation(format!(
            "OEPA needs a positive noise variance, got {noise_variance}"
        )));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Allocation(format!("PQN constant must be nonnegative, got {c}")));
    }
    let g = qam_gain(qam_order);
    let d2: Vec<f64> = singular_values.iter().map(|d| d * d).collect();
    let k = d2.len() as f64;

    let step = |powers: &[f64]| -> Result<Vec<f64>> {
        let xi_q2 = c * powers.iter().zip(&d2).map(|(p, s)| p * s).sum::<f64>() / k;
        let den = (c + 1.0) * noise_variance + xi_q2;
        match form {
            OepaForm::Stationary => stationary_update(&d2, powers, g, c, den, budget),
            OepaForm::Printed => printed_update(&d2, powers, g, c, noise_variance, xi_q2, den, budget),
        }
    };

    let mut powers = eepa(d2.len(), budget)?.powers;
    let mut damping = 1.0;
    let mut last_delta = f64::INFINITY;
    for iteration in 1..=OEPA_MAX_ITERS {
        let target = step(&powers)?;
        let delta = target
            .iter()
            .zip(&powers)
            .map(|(t, p)| (t - p).abs())
            .fold(0.0, f64::max);
        if delta >= last_delta {
            damping = 0.5;
        }
        last_delta = delta;
        for (p, t) in powers.iter_mut().zip(&target) {
            *p += damping * (t - *p);
        }
        if delta < OEPA_TOL {
            let powers = normalize(powers, budget);
            return Ok(PowerAllocation {
                powers,
                budget,
                converged: true,
                iterations: iteration,
            });
        }
    }
    Ok(PowerAllocation {
        powers: normalize(powers, budget),
        budget,
        converged: false,
        iterations: OEPA_MAX_ITERS,
    })
}

fn stationary_update(d2: &[f64], powers: &[f64], g: f64, c: f64, den: f64, budget: f64) -> Result<Vec<f64>> {
    let k = d2.len() as f64;
    let a = c / (k * den)
        * powers
            .iter()
            .zip(d2)
            .map(|(p, s)| {
                let x = g * p * s / den;
                x.sqrt() * (-x / 2.0).exp()
            })
            .sum::<f64>()
        / (2.0 * (2.0 * PI).sqrt());
    let powers_at = |mu: f64| -> Result<Vec<f64>> {
        d2.iter()
            .map(|&s| {
                let m = mu + a * s;
                let x = lambert_w0(g * g * s * s / (8.0 * PI * den * den * m * m))?;
                Ok(den * x / (g * s))
            })
            .collect()
    };
    let total = |mu: f64| -> Result<f64> { Ok(powers_at(mu)?.iter().sum()) };

    // μ + aΔ_k² must stay positive; the total diverges at the lower end.
    let floor = -a * d2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = floor.abs().max(1e-300) + 1.0;
    while total(hi)? > budget {
        hi = floor + 2.0 * (hi - floor);
        if !hi.is_finite() {
            return Err(Error::Allocation("OEPA multiplier bracket diverged".into()));
        }
    }
    let mut lo = hi;
    while total(lo)? <= budget {
        let next = floor + (lo - floor) * 0.5;
        if next == lo || next <= floor {
            break;
        }
        lo = next;
    }
    let mut ok = Ok(());
    let mu = bisect(lo, hi, |mu| match total(mu) {
        Ok(t) => t > budget,
        Err(e) => {
            ok = Err(e);
            false
        }
    });
    ok?;
    powers_at(mu)
}

#[allow(clippy::too_many_arguments)]
fn printed_update(
    d2: &[f64],
    powers: &[f64],
    g: f64,
    c: f64,
    noise_variance: f64,
    xi_q2: f64,
    den: f64,
    budget: f64,
) -> Result<Vec<f64>> {
    let inner = noise_variance + xi_q2;
    let a = c * powers
        .iter()
        .zip(d2)
        .map(|(p, s)| (p * s).sqrt() * (-g * p * s / inner).exp())
        .sum::<f64>()
        / inner.powf(1.5);
    let powers_at = |omega: f64| -> Result<Vec<f64>> {
        d2.iter()
            .map(|&s| {
                let arg = g * s * s / (den * den * (omega * omega + s * a * a));
                Ok(inner * lambert_w0(arg)? / (g * s))
            })
            .collect()
    };
    let total = |omega: f64| -> Result<f64> { Ok(powers_at(omega)?.iter().sum()) };
    if total(0.0)? < budget {
        return Err(Error::Allocation(
            "published OEPA form cannot reach the power budget for any multiplier".into(),
        ));
    }
    let mut hi = 1.0;
    while total(hi)? > budget {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Allocation("OEPA multiplier bracket diverged".into()));
        }
    }
    let mut ok = Ok(());
    let omega = bisect(0.0, hi, |w| match total(w) {
        Ok(t) => t > budget,
        Err(e) => {
            ok = Err(e);
            false
        }
    });
    ok?;
    powers_at(omega)
}

/// Bisects on `[lo, hi]` where `above(lo)` holds and `above(hi)` does not.
fn bisect(mut lo: f64, mut hi: f64, mut above: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
