//! Principal branch of the Lambert W function on `[0, ∞)`.

use crate::error::{Error, Result};

const MAX_ITERS: usize = 64;

/// `W₀(z)` for `z ≥ 0`: the unique `w ≥ 0` with `w·eʷ = z`.
///
/// Halley iteration from an asymptotic starting point; for large `z` the
/// iteration runs on `w + ln w = ln z` instead so `eʷ` never overflows.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambert_w0 needs a nonnegative argument, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if z > 1e2 {
        return Ok(large_branch(z));
    }
    let mut w = initial_guess(z);
    for _ in 0..MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(polish(w, z))
}

fn initial_guess(z: f64) -> f64 {
    if z < 0.5 {
        // series z − z² + 1.5 z³
        z * (1.0 - z * (1.0 - 1.5 * z))
    } else {
        let l = (1.0 + z).ln();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    }
}

/// Newton on `g(w) = w + ln w − ln z`, which is well conditioned for large `z`.
fn large_branch(z: f64) -> f64 {
    let lz = z.ln();
    let llz = lz.ln();
    let mut w = lz - llz + llz / lz;
    for _ in 0..MAX_ITERS {
        let g = w + w.ln() - lz;
        let step = g * w / (w + 1.0);
        w -= step;
        if step.abs() <= 2.0 * f64::EPSILON * w {
            break;
        }
    }
    w
}

/// One last Newton step on `w eʷ − z`, kept only if it lowers the residual.
fn polish(w: f64, z: f64) -> f64 {
    let residual = |v: f64| (v * v.exp() - z).abs();
    let ew = w.exp();
    let candidate = w - (w * ew - z) / (ew * (w + 1.0));
    if candidate.is_finite() && residual(candidate) < residual(w) {
        candidate
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(z: f64) -> f64 {
        let w = lambert_w0(z).unwrap();
        (w * w.exp() - z).abs() / z.max(1.0)
    }

    #[test]
    fn fixed_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn omega_constant_against_newton() {
        // plain Newton on w eʷ − 1 as an independent oracle
        let mut w = 0.5f64;
        for _ in 0..100 {
            w -= (w * w.exp() - 1.0) / (w.exp() * (w + 1.0));
        }
        let got = lambert_w0(1.0).unwrap();
        assert!((got - w).abs() < 1e-14);
        assert!((got - 0.567_143_290_4).abs() < 1e-10);
    }

    #[test]
    fn residual_over_log_grid() {
        for i in 0..=4000 {
            let z = 10f64.powf(-12.0 + 20.0 * i as f64 / 4000.0);
            assert!(residual(z) <= 1e-12, "z = {z}: {}", residual(z));
        }
    }

    #[test]
    fn tiny_and_huge() {
        let z = 1e-300;
        assert!((lambert_w0(z).unwrap() - z).abs() <= 1e-12 * z);
        let w = lambert_w0(1e300).unwrap();
        assert!(((w + w.ln()) - 1e300f64.ln()).abs() < 1e-12 * w);
        assert_eq!(lambert_w0(f64::INFINITY).unwrap(), f64::INFINITY);
    }

    #[test]
    fn negative_is_error() {
        assert!(lambert_w0(-0.1).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }
}
