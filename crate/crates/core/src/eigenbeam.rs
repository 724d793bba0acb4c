//! Frequency-domain MIMO channel assembly, per-subcarrier SVD and the block
//! Tx/Rx beamformers that diagonalize the link.
//!
//! The stacked channel `D` is block diagonal up to a permutation: with rows
//! indexed `j·N + n` and columns `i·N + n`, only entries sharing a subcarrier
//! `n` are nonzero. Its SVD is therefore the union of the `n_r × n_t`
//! per-subcarrier SVDs, which is what is computed here. Modes are numbered
//! subcarrier-major, stream-minor.

use num_complex::Complex64;

use crate::cmat::ComplexMat;
use crate::error::{Error, Result};
use crate::linkmodel::{circulant_freq_response, FreqChannel};
use crate::poweralloc::BUDGET_TOLERANCE;
use crate::svchannel::DiscreteChannel;

/// Singular values at or below this fraction of the largest one are dropped.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Builds the per-subcarrier matrices from the tap sets.
pub fn assemble_freq_channel(channel: &DiscreteChannel, subcarriers: usize) -> Result<FreqChannel> {
    let (n_rx, n_tx) = (channel.n_rx(), channel.n_tx());
    let mut responses = Vec::with_capacity(n_rx * n_tx);
    for j in 0..n_rx {
        for i in 0..n_tx {
            responses.push(circulant_freq_response(channel.response(j, i), subcarriers)?);
        }
    }
    let matrices = (0..subcarriers)
        .map(|n| ComplexMat::from_fn(n_rx, n_tx, |j, i| responses[j * n_tx + i][n]))
        .collect();
    FreqChannel::new(matrices)
}

/// SVD factors of one subcarrier, truncated to its nonzero modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierModes {
    /// `n_r × L̂_n`, orthonormal columns.
    pub u: ComplexMat,
    /// Descending and strictly positive.
    pub singular_values: Vec<f64>,
    /// `n_t × L̂_n`, orthonormal columns.
    pub v: ComplexMat,
}

/// Position of one mode in the global order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeIndex {
    pub subcarrier: usize,
    pub stream: usize,
    pub singular_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenModes {
    n_rx: usize,
    n_tx: usize,
    per_subcarrier: Vec<SubcarrierModes>,
    flat: Vec<ModeIndex>,
}

impl EigenModes {
    pub fn subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn count(&self) -> usize {
        self.flat.len()
    }

    pub fn subcarrier(&self, n: usize) -> &SubcarrierModes {
        &self.per_subcarrier[n]
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.flat
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.flat.iter().map(|m| m.singular_value).collect()
    }
}

/// Per-subcarrier SVD with rank truncation and global mode numbering.
pub fn eigen_decompose(fc: &FreqChannel) -> Result<EigenModes> {
    let raw = fc
        .iter()
        .map(|h| {
            if h.as_matrix().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::InvalidArgument("channel has non-finite entries".into()));
            }
            Ok(sorted_svd(h))
        })
        .collect::<Result<Vec<_>>>()?;
    let global_max = raw.iter().flat_map(|(_, s, _)| s.iter().copied()).fold(0.0, f64::max);
    let threshold = RANK_TOLERANCE * global_max;

    let mut per_subcarrier = Vec::with_capacity(raw.len());
    let mut flat = Vec::new();
    for (n, (u, s, v)) in raw.into_iter().enumerate() {
        let keep = s.iter().take_while(|&&x| x > threshold).count();
        let u = ComplexMat::from_fn(u.rows(), keep, |r, c| u[(r, c)]);
        let v = ComplexMat::from_fn(v.rows(), keep, |r, c| v[(r, c)]);
        let s: Vec<f64> = s[..keep].to_vec();
        flat.extend(s.iter().enumerate().map(|(stream, &sv)| ModeIndex {
            subcarrier: n,
            stream,
            singular_value: sv,
        }));
        per_subcarrier.push(SubcarrierModes {
            u,
            singular_values: s,
            v,
        });
    }
    Ok(EigenModes {
        n_rx: fc.n_rx(),
        n_tx: fc.n_tx(),
        per_subcarrier,
        flat,
    })
}

/// Thin SVD `H = U diag(s) V†` with `s` descending.
fn sorted_svd(h: &ComplexMat) -> (ComplexMat, Vec<f64>, ComplexMat) {
    let svd = h.as_matrix().clone().svd(true, true);
    let u = svd.u.expect("left factor requested");
    let v = svd.v_t.expect("right factor requested").adjoint();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = ComplexMat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = ComplexMat::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    let s = order.iter().map(|&k| svd.singular_values[k]).collect();
    (u, s, v)
}

/// Block-structured beamformer: one `antennas × L̂_n` block per subcarrier.
///
/// As a dense matrix it is `(antennas·N) × Σ L̂_n` with row `i·N + n` and the
/// column of global mode `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBeamformer {
    antennas: usize,
    blocks: Vec<ComplexMat>,
    offsets: Vec<usize>,
}

impl BlockBeamformer {
    pub fn new(antennas: usize, blocks: Vec<ComplexMat>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "beamformer needs at least one subcarrier".into(),
            ));
        }
        if blocks.iter().any(|b| b.rows() != antennas) {
            return Err(Error::InvalidArgument(format!("every block must have {antennas} rows")));
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &blocks {
            acc += b.cols();
            offsets.push(acc);
        }
        Ok(BlockBeamformer {
            antennas,
            blocks,
            offsets,
        })
    }

    /// Identity on every subcarrier: stream `n·antennas + i` drives antenna `i`.
    pub fn identity(antennas: usize, subcarriers: usize) -> Self {
        Self::new(antennas, vec![ComplexMat::identity(antennas); subcarriers]).expect("consistent shapes")
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.blocks.len()
    }

    pub fn streams(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block(&self, n: usize) -> &ComplexMat {
        &self.blocks[n]
    }

    /// `Tr(B†B)`.
    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(ComplexMat::frobenius_sq).sum()
    }

    /// `u = Bx`, antenna-major.
    pub fn spread(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.streams());
        let n_sc = self.subcarriers();
        let mut u = vec![Complex64::new(0.0, 0.0); self.antennas * n_sc];
        for (n, b) in self.blocks.iter().enumerate() {
            let y = b.apply(&x[self.offsets[n]..self.offsets[n + 1]]);
            for (i, value) in y.into_iter().enumerate() {
                u[i * n_sc + n] = value;
            }
        }
        u
    }

    /// `B†v` for an antenna-major `v`.
    pub fn combine(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n_sc = self.subcarriers();
        assert_eq!(v.len(), self.antennas * n_sc);
        let mut out = Vec::with_capacity(self.streams());
        for (n, b) in self.blocks.iter().enumerate() {
            let local: Vec<Complex64> = (0..self.antennas).map(|i| v[i * n_sc + n]).collect();
            out.extend(b.apply_adjoint(&local));
        }
        out
    }

    /// Dense `(antennas·N) × streams` matrix.
    pub fn to_dense(&self) -> ComplexMat {
        let n_sc = self.subcarriers();
        let mut m = nalgebra::DMatrix::zeros(self.antennas * n_sc, self.streams());
        for (n, b) in self.blocks.iter().enumerate() {
            for i in 0..self.antennas {
                for c in 0..b.cols() {
                    m[(i * n_sc + n, self.offsets[n] + c)] = b[(i, c)];
                }
            }
        }
        ComplexMat::from_matrix(m).expect("finite blocks")
    }
}

/// Tx beamformer `B` and Rx combiner `A`; the receiver forms `x̂ = A†v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerPair {
    pub tx: BlockBeamformer,
    pub rx: BlockBeamformer,
}

/// Tx block `V(n)·diag(√P)` and Rx block `U(n)` on every subcarrier, so that
/// `A†DB = diag(√P_k Δ_k)`.
pub fn build_beamformers(modes: &EigenModes, powers: &[f64], budget: f64) -> Result<BeamformerPair> {
    if powers.len() != modes.count() {
        return Err(Error::InvalidArgument(format!(
            "{} powers for {} modes",
            powers.len(),
            modes.count()
        )));
    }
    if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidArgument("powers must be finite and nonnegative".into()));
    }
    let trace: f64 = powers.iter().sum();
    if trace > budget + BUDGET_TOLERANCE {
        return Err(Error::PowerConstraint { trace, budget });
    }
    let mut tx = Vec::with_capacity(modes.subcarriers());
    let mut rx = Vec::with_capacity(modes.subcarriers());
    let mut k = 0;
    for sc in &modes.per_subcarrier {
        let amps: Vec<f64> = powers[k..k + sc.singular_values.len()]
            .iter()
            .map(|p| p.sqrt())
            .collect();
        k += amps.len();
        tx.push(ComplexMat::from_fn(sc.v.rows(), sc.v.cols(), |r, c| {
            sc.v[(r, c)] * amps[c]
        }));
        rx.push(sc.u.clone());
    }
    Ok(BeamformerPair {
        tx: BlockBeamformer::new(modes.n_tx, tx)?,
        rx: BlockBeamformer::new(modes.n_rx, rx)?,
    })
}
