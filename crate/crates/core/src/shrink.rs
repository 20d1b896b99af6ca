//! Shrink operators that compress a block of rows into an ℓ×d sketch while
//! never overestimating the energy of the input in any direction.

use crate::error::{Error, Result};
use crate::linalg::{norm, svd_top, unit_sphere_vector, DenseMatrix, SketchRng};
use crate::randsvd::{basis_rows, PowerConfig};
use crate::sparse::SparseBuffer;

/// Fraction of the shrink gap credited to each of the ℓ sketch rows.
pub const ALPHA: f64 = 6.0 / 41.0;

/// Sparse-shrink attempts before `boosted_sparse_shrink` gives up.
pub const RETRY_CAP: usize = 64;

/// Frobenius drops at or below this fraction of ‖A′‖_F² count as exact
/// recovery. The difference is PSD, so its spectral norm is bounded by the drop.
const EXACT_RECOVERY_REL: f64 = 1e-10;

/// Accumulated log-magnitude tolerated by the verifier before rejecting.
/// Keeps roundoff from failing operators whose norm is exactly one.
const VERIFY_LOG_SLACK: f64 = 1e-9;

/// Persistent state of the spectral verifier, shared by every verification
/// in one sketch run.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifierState {
    calls: u64,
    delta: f64,
    c_verify: f64,
    spent: f64,
}

impl VerifierState {
    pub const DEFAULT_C_VERIFY: f64 = 2.0;

    pub fn new(delta: f64, c_verify: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        if !(c_verify > 0.0 && c_verify.is_finite()) {
            return Err(Error::invalid(format!(
                "verifier constant must be positive, got {c_verify}"
            )));
        }
        Ok(VerifierState {
            calls: 0,
            delta,
            c_verify,
            spent: 0.0,
        })
    }

    pub fn with_delta(delta: f64) -> Result<Self> {
        Self::new(delta, Self::DEFAULT_C_VERIFY)
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Sum of the per-call budgets δ_i handed out so far; always below δ.
    pub fn spent(&self) -> f64 {
        self.spent
    }

    /// Registers one verification: bumps the counter and returns
    /// `δ_i = δ / (2 i²)`.
    fn next_budget(&mut self) -> f64 {
        self.calls += 1;
        let i = self.calls as f64;
        let di = self.delta / (2.0 * i * i);
        self.spent += di;
        di
    }

    /// Power steps for budget `δ_i`: `ceil(c · log₂(d/δ_i))`, at least one.
    pub fn steps(&self, d: usize, delta_i: f64) -> usize {
        let t = (self.c_verify * (d as f64 / delta_i).log2()).ceil();
        if t.is_finite() && t >= 1.0 {
            t as usize
        } else {
            1
        }
    }
}

/// Output of [`boosted_sparse_shrink`].
#[derive(Clone, Debug)]
pub struct ShrinkReport {
    pub sketch: DenseMatrix,
    /// `(‖A′‖_F² − ‖B′‖_F²) / (αℓ)`.
    pub delta_hat: f64,
    /// Number of sparse-shrink runs, including the accepted one.
    pub attempts: usize,
}

pub fn delta_hat(a_frob_sq: f64, b_frob_sq: f64, ell: usize) -> f64 {
    (a_frob_sq - b_frob_sq) / (ALPHA * ell as f64)
}

/// Shrinks `x` along its top-ℓ singular directions:
/// row i of the result is `sqrt(λ_i² − λ_ℓ²)·v_iᵀ`. The last row is zero.
fn subtract_last(x: &DenseMatrix, ell: usize) -> Result<DenseMatrix> {
    let svd = svd_top(x, ell)?;
    let floor = svd.singular[ell - 1] * svd.singular[ell - 1];
    let mut b = svd.right_t;
    for i in 0..ell {
        let s = svd.singular[i];
        let c = if i + 1 < ell {
            (s * s - floor).max(0.0).sqrt()
        } else {
            0.0
        };
        b.row_mut(i).iter_mut().for_each(|v| *v *= c);
    }
    Ok(b)
}

/// Exact-SVD shrink of an m×d matrix down to ℓ rows.
pub fn dense_shrink(a: &DenseMatrix, ell: usize) -> Result<DenseMatrix> {
    if ell == 0 || ell > a.rows() {
        return Err(Error::dims(format!(
            "cannot shrink {} rows to {ell}",
            a.rows()
        )));
    }
    subtract_last(a, ell)
}

/// Shrink of a sparse buffer through its approximate top-ℓ left subspace.
pub fn sparse_shrink(
    a: &SparseBuffer,
    ell: usize,
    cfg: &PowerConfig,
    rng: &mut SketchRng,
) -> Result<DenseMatrix> {
    if ell == 0 || ell > a.rows() || ell > a.cols() {
        return Err(Error::dims(format!(
            "cannot shrink a {}x{} buffer to {ell} rows",
            a.rows(),
            a.cols()
        )));
    }
    let (zt, _) = basis_rows(a, ell, cfg, rng)?;
    // P = ZᵀA′, one sparse transpose product per basis vector
    let p = a.tmul_block(&zt)?;
    if !p.is_finite() {
        return Err(Error::NonFinite("sparse shrink projection"));
    }
    subtract_last(&p, ell)
}

/// Randomized test of `‖C‖₂ ≤ 1` for a symmetric PSD operator.
///
/// Runs `ceil(c·log₂(d/δ_i))` power steps from a random unit vector and
/// accepts iff the iterate's norm stays at most one. Magnitudes are tracked
/// in the log domain; once the running log-norm is positive and a single
/// step no longer shrinks the iterate, rejection is certain and happens early.
pub fn verify_spectral<F>(
    mut apply: F,
    d: usize,
    state: &mut VerifierState,
    rng: &mut SketchRng,
) -> Result<bool>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let delta_i = state.next_budget();
    let steps = state.steps(d, delta_i);
    if d == 0 {
        return Ok(true);
    }
    let mut x = unit_sphere_vector(d, rng);
    let mut log_mag = 0.0;
    for _ in 0..steps {
        let y = apply(&x);
        if y.len() != d {
            return Err(Error::dims(format!(
                "operator returned {} entries for {d}",
                y.len()
            )));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("verify_spectral operator"));
        }
        let n = norm(&y);
        if n == 0.0 {
            return Ok(true);
        }
        log_mag += n.ln();
        if log_mag > VERIFY_LOG_SLACK && n >= 1.0 {
            return Ok(false);
        }
        x = y;
        x.iter_mut().for_each(|v| *v /= n);
    }
    Ok(log_mag <= VERIFY_LOG_SLACK)
}

/// Repeats [`sparse_shrink`] until the spectral verifier accepts
/// `(A′ᵀA′ − B′ᵀB′)/(Δ/2)`, with Δ = (‖A′‖_F² − ‖B′‖_F²)/(αℓ).
pub fn boosted_sparse_shrink(
    a: &SparseBuffer,
    ell: usize,
    state: &mut VerifierState,
    cfg: &PowerConfig,
    rng: &mut SketchRng,
) -> Result<ShrinkReport> {
    let a_sq = a.frob_sq();
    for attempt in 1..=RETRY_CAP {
        let b = sparse_shrink(a, ell, cfg, rng)?;
        let drop = a_sq - b.frob_sq();
        if drop <= EXACT_RECOVERY_REL * a_sq {
            return Ok(ShrinkReport {
                sketch: b,
                delta_hat: delta_hat(a_sq, a_sq - drop.max(0.0), ell),
                attempts: attempt,
            });
        }
        let dh = delta_hat(a_sq, b.frob_sq(), ell);
        let scale = 2.0 / dh;
        let op = |x: &[f64]| -> Vec<f64> {
            let ax = a.matvec(x).expect("length d");
            let mut out = a.rmatvec(&ax).expect("length m");
            let bx = b.mul_vec(x).expect("length d");
            let btbx = b.tmul_vec(&bx).expect("length ell");
            for (o, s) in out.iter_mut().zip(&btbx) {
                *o = scale * (*o - s);
            }
            out
        };
        if verify_spectral(op, a.cols(), state, rng)? {
            return Ok(ShrinkReport {
                sketch: b,
                delta_hat: dh,
                attempts: attempt,
            });
        }
    }
    Err(Error::RetryCapExceeded {
        attempts: RETRY_CAP,
    })
}
