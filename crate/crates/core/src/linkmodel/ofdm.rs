use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::cmat::ComplexMat;
use crate::error::{Error, Result};

/// N-point DFT scaled by 1/√N in both directions, so `F_N` is unitary.
#[derive(Clone)]
pub struct UnitaryDft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("n", &self.n).finish()
    }
}

impl UnitaryDft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        UnitaryDft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place `x ← F_N x`.
    pub fn forward(&self, x: &mut [Complex64]) {
        self.forward.process(x);
        x.iter_mut().for_each(|z| *z *= self.scale);
    }

    /// In place `x ← F_N† x`.
    pub fn inverse(&self, x: &mut [Complex64]) {
        self.inverse.process(x);
        x.iter_mut().for_each(|z| *z *= self.scale);
    }
}

/// Frequency response `H[n] = Σ_m h[m] e^{−j2πnm/N}` of the zero-padded taps.
///
/// These are the diagonal entries of `F_N C F_N†` where `C` is the circulant
/// matrix with first column `h`.
pub fn circulant_freq_response(h: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if h.len() > n {
        return Err(Error::InvalidArgument(format!(
            "{} taps do not fit in a {n}-point DFT",
            h.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..h.len()].copy_from_slice(h);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf)
}

/// Dense unitary DFT matrix, `F[k][m] = e^{−j2πkm/N}/√N`.
pub fn dft_matrix(n: usize) -> ComplexMat {
    let scale = 1.0 / (n as f64).sqrt();
    ComplexMat::from_fn(n, n, |k, m| {
        let phase = -2.0 * PI * ((k * m) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// Dense circulant matrix `C[i][k] = h[(i − k) mod N]`.
pub fn circulant_matrix(h: &[Complex64], n: usize) -> ComplexMat {
    ComplexMat::from_fn(n, n, |i, k| {
        let idx = (i + n - k) % n;
        h.get(idx).copied().unwrap_or_default()
    })
}
