use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Gray-coded square M-QAM with unit average symbol energy.
///
/// The first half of each symbol's bits (MSB first) selects the in-phase
/// level, the second half the quadrature level. Along each axis level index
/// `i = 0` is the most positive amplitude and carries the reflected-Gray label
/// `i ^ (i >> 1)`, so for QPSK the bits `00` map to `(1 + j)/√2`.
#[derive(Debug, Clone)]
pub struct Qam {
    order: u32,
    bits_per_axis: u32,
    /// Amplitude of level index i (before scaling).
    amplitude: Vec<f64>,
    /// Level index for each Gray label.
    index_of_label: Vec<usize>,
    scale: f64,
}

impl Qam {
    pub fn new(order: u32) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64) {
            return Err(Error::InvalidArgument(format!(
                "QAM order must be 4, 16 or 64, got {order}"
            )));
        }
        let bits_per_axis = order.trailing_zeros() / 2;
        let levels = 1usize << bits_per_axis;
        let amplitude = (0..levels).map(|i| (levels - 1) as f64 - 2.0 * i as f64).collect();
        let mut index_of_label = vec![0; levels];
        for i in 0..levels {
            index_of_label[i ^ (i >> 1)] = i;
        }
        Ok(Qam {
            order,
            bits_per_axis,
            amplitude,
            index_of_label,
            scale: (1.5 / (order as f64 - 1.0)).sqrt(),
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis as usize
    }

    fn levels(&self) -> usize {
        self.amplitude.len()
    }

    fn label(bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    /// Maps one symbol's worth of bits.
    pub fn map(&self, bits: &[u8]) -> Complex64 {
        let m = self.bits_per_axis as usize;
        debug_assert_eq!(bits.len(), 2 * m);
        let i = self.index_of_label[Self::label(&bits[..m])];
        let q = self.index_of_label[Self::label(&bits[m..])];
        Complex64::new(self.amplitude[i], self.amplitude[q]) * self.scale
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let bps = self.bits_per_symbol();
        if !bits.len().is_multiple_of(bps) {
            return Err(Error::InvalidArgument(format!(
                "{} bits is not a multiple of {bps}",
                bits.len()
            )));
        }
        Ok(bits.chunks(bps).map(|chunk| self.map(chunk)).collect())
    }

    fn axis_index(&self, y: f64) -> usize {
        let top = (self.levels() - 1) as f64;
        let raw = ((top - y / self.scale) / 2.0).round();
        raw.clamp(0.0, top) as usize
    }

    fn push_axis_bits(&self, index: usize, out: &mut Vec<u8>) {
        let label = index ^ (index >> 1);
        for k in (0..self.bits_per_axis).rev() {
            out.push(((label >> k) & 1) as u8);
        }
    }

    /// Minimum-distance hard decision for one symbol, appending its bits.
    pub fn demap_into(&self, z: Complex64, out: &mut Vec<u8>) {
        self.push_axis_bits(self.axis_index(z.re), out);
        self.push_axis_bits(self.axis_index(z.im), out);
    }

    pub fn demodulate(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for &z in symbols {
            self.demap_into(z, &mut out);
        }
        out
    }

    /// Every constellation point with its bit label.
    pub fn constellation(&self) -> Vec<(Vec<u8>, Complex64)> {
        let bps = self.bits_per_symbol();
        (0..self.order as usize)
            .map(|label| {
                let bits: Vec<u8> = (0..bps).rev().map(|k| ((label >> k) & 1) as u8).collect();
                let point = self.map(&bits);
                (bits, point)
            })
            .collect()
    }
}

pub fn qam_modulate(bits: &[u8], order: u32) -> Result<Vec<Complex64>> {
    Qam::new(order)?.modulate(bits)
}

pub fn qam_demodulate(symbols: &[Complex64], order: u32) -> Result<Vec<u8>> {
    Ok(Qam::new(order)?.demodulate(symbols))
}

/// A vector of QAM symbols together with the bits they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct QamSymbolBlock {
    pub bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

impl QamSymbolBlock {
    /// `count` symbols from uniformly random bits.
    pub fn random<R: Rng + ?Sized>(qam: &Qam, count: usize, rng: &mut R) -> Self {
        let bits: Vec<u8> = (0..count * qam.bits_per_symbol())
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        let symbols = qam.modulate(&bits).expect("whole symbols");
        QamSymbolBlock { bits, symbols }
    }
}
