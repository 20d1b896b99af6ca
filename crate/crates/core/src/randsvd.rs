//! Randomized block power method (simultaneous iteration) over a sparse
//! buffer. Every sweep costs O(nnz·k) for the sparse products plus O(m·k²)
//! for re-orthonormalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, orthonormalize_rows, sym_eigen_ql, DenseMatrix, SketchRng};
use crate::sparse::SparseBuffer;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Target accuracy, in (0, 1).
    pub epsilon: f64,
    /// Multiplier on `ln(m/ε)/ε` when deriving the sweep count.
    pub q_constant: f64,
    /// Explicit sweep count; bypasses the derived value when set.
    pub q_override: Option<usize>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            epsilon: 0.25,
            q_constant: 1.0,
            q_override: None,
        }
    }
}

impl PowerConfig {
    /// Sweep count used by the `--fast-q` preset.
    pub const FAST_Q: usize = 8;

    pub fn fast() -> Self {
        PowerConfig {
            q_override: Some(Self::FAST_Q),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.q_constant > 0.0 && self.q_constant.is_finite()) {
            return Err(Error::invalid(format!(
                "q constant must be positive, got {}",
                self.q_constant
            )));
        }
        Ok(())
    }

    /// `max(1, ceil(c_q · ln(m/ε) / ε))` unless overridden.
    pub fn sweeps(&self, m: usize) -> usize {
        if let Some(q) = self.q_override {
            return q;
        }
        let m = m.max(1) as f64;
        let q = (self.q_constant * (m / self.epsilon).ln() / self.epsilon).ceil();
        (q as usize).max(1)
    }
}

/// Orthonormal m×k basis approximating the top-k left singular subspace of
/// `a`. Columns are Ritz vectors ordered by decreasing Ritz value; under rank
/// deficiency trailing columns are zero.
pub fn simultaneous_iteration(
    a: &SparseBuffer,
    k: usize,
    cfg: &PowerConfig,
    rng: &mut SketchRng,
) -> Result<DenseMatrix> {
    Ok(basis_rows(a, k, cfg, rng)?.0.transpose())
}

/// Row form of [`simultaneous_iteration`]: k×m basis plus the Ritz values
/// (squared singular value estimates) for the live rows.
pub(crate) fn basis_rows(
    a: &SparseBuffer,
    k: usize,
    cfg: &PowerConfig,
    rng: &mut SketchRng,
) -> Result<(DenseMatrix, Vec<f64>)> {
    cfg.validate()?;
    let (m, d) = (a.rows(), a.cols());
    if k == 0 || k > m.min(d) {
        return Err(Error::dims(format!(
            "rank {k} requested from a {m}x{d} buffer"
        )));
    }
    let q = cfg.sweeps(m);
    let gt = gaussian_matrix(k, d, rng);
    let mut yt = a.mul_block(&gt)?;
    ensure_finite(&yt)?;
    orthonormalize_rows(&mut yt);
    for _ in 0..q {
        yt = sweep(a, &yt)?;
    }
    rayleigh_ritz(a, &yt)
}

/// One block power step: `Y ← orth(A·(Aᵀ·Y))`.
pub(crate) fn sweep(a: &SparseBuffer, yt: &DenseMatrix) -> Result<DenseMatrix> {
    let w = a.tmul_block(yt)?;
    let mut next = a.mul_block(&w)?;
    ensure_finite(&next)?;
    orthonormalize_rows(&mut next);
    Ok(next)
}

/// Rotates an orthonormal row basis (zero rows allowed) onto the Ritz
/// vectors of `A·Aᵀ` restricted to its span. Zero rows stay at the end.
pub(crate) fn rayleigh_ritz(a: &SparseBuffer, yt: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let (k, m) = yt.shape();
    let live: Vec<usize> = (0..k)
        .filter(|&i| yt.row(i).iter().any(|&v| v != 0.0))
        .collect();
    let mut basis = DenseMatrix::zeros(live.len(), m);
    for (r, &i) in live.iter().enumerate() {
        basis.row_mut(r).copy_from_slice(yt.row(i));
    }
    let mut out = DenseMatrix::zeros(k, m);
    if live.is_empty() {
        return Ok((out, Vec::new()));
    }
    let w = a.tmul_block(&basis)?;
    let eig = sym_eigen_ql(&w.gram_rows())?;
    let ones = vec![1.0; live.len()];
    let rotated = crate::linalg::combine_rows(&basis, &eig.vectors, &ones);
    out.as_mut_slice()[..rotated.as_slice().len()].copy_from_slice(rotated.as_slice());
    let ritz = eig.values.iter().map(|&v| v.max(0.0)).collect();
    Ok((out, ritz))
}

fn ensure_finite(m: &DenseMatrix) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("simultaneous iteration"))
    }
}
