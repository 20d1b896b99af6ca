use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{
    dot, gaussian_matrix, orthonormalize_rows, spectral_norm_sym, svd_top, sym_eigenvalues,
    DenseMatrix, SketchRng,
};
use crate::par;
use crate::randsvd::{rayleigh_ritz, sweep};
use crate::sparse::SparseBuffer;

/// Widest matrix for which the tail oracle forms the dense d×d Gram matrix.
pub const DENSE_TAIL_MAX_D: usize = 2500;
/// Sweep cap of the randomized tail oracle.
pub const TAIL_MAX_SWEEPS: usize = 300;
/// Extra block columns carried by the randomized tail oracle.
pub const TAIL_OVERSAMPLE: usize = 5;
/// Successive singular value estimates must agree to this fraction of σ₁.
pub const TAIL_CONVERGENCE_REL: f64 = 1e-10;
/// Power iterations behind every covariance error.
pub const COV_ERR_ITERATIONS: usize = 1000;
/// Tail energies below this fraction of ‖A‖_F² make the projection error undefined.
pub const UNDEFINED_TAIL_REL: f64 = 1e-12;

const COV_ERR_SEED: u64 = 0x5EED_C0E5;
const TAIL_SEED: u64 = 0x7A11;
const ROW_BLOCK: usize = 512;

/// Best rank-k approximation error and the leading singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct Tail {
    /// ‖A − A_k‖_F².
    pub energy: f64,
    /// σ₁ ≥ … ≥ σ_k.
    pub top: Vec<f64>,
}

/// `‖A − A_k‖_F²`, using the dense Gram eigenvalues when d is small enough
/// and the randomized oracle otherwise.
pub fn exact_tail(a: &SparseBuffer, k: usize) -> Result<Tail> {
    if a.cols() <= DENSE_TAIL_MAX_D {
        exact_tail_dense(a, k)
    } else {
        exact_tail_randomized(a, k)
    }
}

pub fn exact_tail_dense(a: &SparseBuffer, k: usize) -> Result<Tail> {
    let frob = a.frob_sq();
    if k == 0 {
        return Ok(Tail {
            energy: frob,
            top: Vec::new(),
        });
    }
    let eig = sym_eigenvalues(&a.gram_cols_dense())?;
    let top: Vec<f64> = eig.iter().take(k).map(|&l| l.max(0.0).sqrt()).collect();
    Ok(Tail {
        energy: tail_energy(frob, &top),
        top,
    })
}

/// Block power iteration with `k + 5` vectors, run until successive
/// estimates of σ₁…σ_k agree to `1e-10·σ₁`. Fails rather than returning an
/// unconverged estimate.
pub fn exact_tail_randomized(a: &SparseBuffer, k: usize) -> Result<Tail> {
    let frob = a.frob_sq();
    let full = a.rows().min(a.cols());
    if k == 0 || full == 0 {
        return Ok(Tail {
            energy: frob,
            top: Vec::new(),
        });
    }
    let k = k.min(full);
    let block = (k + TAIL_OVERSAMPLE).min(full);
    let mut rng = SketchRng::new(TAIL_SEED);
    let mut yt = a.mul_block(&gaussian_matrix(block, a.cols(), &mut rng))?;
    orthonormalize_rows(&mut yt);
    let mut prev: Option<Vec<f64>> = None;
    for _ in 0..TAIL_MAX_SWEEPS {
        let (rotated, ritz) = rayleigh_ritz(a, &sweep(a, &yt)?)?;
        yt = rotated;
        let mut top: Vec<f64> = ritz.iter().take(k).map(|&l| l.sqrt()).collect();
        top.resize(k, 0.0);
        if let Some(p) = &prev {
            let scale = top[0].max(f64::MIN_POSITIVE);
            let moved = top
                .iter()
                .zip(p)
                .map(|(s, t)| (s - t).abs())
                .fold(0.0, f64::max);
            if moved <= TAIL_CONVERGENCE_REL * scale {
                return Ok(Tail {
                    energy: tail_energy(frob, &top),
                    top,
                });
            }
        }
        prev = Some(top);
    }
    Err(Error::NonConvergence {
        what: "tail energy oracle",
        iterations: TAIL_MAX_SWEEPS,
    })
}

fn tail_energy(frob: f64, top: &[f64]) -> f64 {
    (frob - top.iter().map(|s| s * s).sum::<f64>()).max(0.0)
}

/// `‖A − A·V_kV_kᵀ‖_F²` for the top-k right singular vectors of `b`,
/// accumulated row by row as `‖a‖² − ‖V_kᵀa‖²`.
pub fn residual_energy(a: &SparseBuffer, b: &DenseMatrix, k: usize) -> Result<f64> {
    if a.cols() != b.cols() {
        return Err(Error::dims(format!(
            "matrix has {} columns, sketch {}",
            a.cols(),
            b.cols()
        )));
    }
    if k == 0 {
        return Ok(a.frob_sq());
    }
    if k > b.rows() {
        return Err(Error::UndefinedMetric(format!(
            "rank {k} exceeds the {} sketch rows",
            b.rows()
        )));
    }
    let svd = svd_top(b, k)?;
    if svd.rank == 0 {
        return Err(Error::UndefinedMetric(
            "sketch is zero, no top-k subspace".into(),
        ));
    }
    let vt = &svd.right_t;
    let blocks = a.rows().div_ceil(ROW_BLOCK);
    let partial = par::map_range(blocks, |blk| {
        let mut acc = 0.0;
        let mut proj = vec![0.0; k];
        for i in blk * ROW_BLOCK..((blk + 1) * ROW_BLOCK).min(a.rows()) {
            let (idx, val) = a.row(i);
            for (p, v) in proj.iter_mut().zip(vt.row_iter()) {
                *p = idx.iter().zip(val).map(|(&j, &x)| x * v[j as usize]).sum();
            }
            let row_sq: f64 = val.iter().map(|x| x * x).sum();
            acc += row_sq - dot(&proj, &proj);
        }
        acc
    });
    Ok(partial.into_iter().sum::<f64>().max(0.0))
}

/// Covariance error `‖AᵀA − BᵀB‖₂ / ‖A‖_F²` by power iteration.
pub fn cov_err(a: &SparseBuffer, b: &DenseMatrix) -> Result<f64> {
    Evaluator::new(a).cov_err(b)
}

/// Projection error `‖A − π_{B_k}(A)‖_F² / ‖A − A_k‖_F²`.
pub fn proj_err(a: &SparseBuffer, b: &DenseMatrix, k: usize) -> Result<f64> {
    Evaluator::new(a).proj_err(b, k)
}

/// Evaluates many sketches of one matrix, caching the transpose and the
/// tail energies.
pub struct Evaluator<'a> {
    a: &'a SparseBuffer,
    at: SparseBuffer,
    tails: HashMap<usize, Tail>,
    iterations: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(a: &'a SparseBuffer) -> Self {
        Evaluator {
            a,
            at: a.transpose(),
            tails: HashMap::new(),
            iterations: COV_ERR_ITERATIONS,
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn matrix(&self) -> &SparseBuffer {
        self.a
    }

    pub fn tail(&mut self, k: usize) -> Result<&Tail> {
        if !self.tails.contains_key(&k) {
            let t = exact_tail(self.a, k)?;
            self.tails.insert(k, t);
        }
        Ok(&self.tails[&k])
    }

    pub fn proj_err(&mut self, b: &DenseMatrix, k: usize) -> Result<f64> {
        let frob = self.a.frob_sq();
        if k == 0 {
            return if frob > 0.0 {
                Ok(1.0)
            } else {
                Err(Error::UndefinedMetric("matrix is zero".into()))
            };
        }
        let tail = self.tail(k)?.energy;
        if tail < UNDEFINED_TAIL_REL * frob || tail == 0.0 {
            return Err(Error::UndefinedMetric(format!(
                "rank of the matrix is at most {k}"
            )));
        }
        Ok(residual_energy(self.a, b, k)? / tail)
    }

    pub fn cov_err(&self, b: &DenseMatrix) -> Result<f64> {
        let (a, at) = (self.a, &self.at);
        if a.cols() != b.cols() {
            return Err(Error::dims(format!(
                "matrix has {} columns, sketch {}",
                a.cols(),
                b.cols()
            )));
        }
        let frob = a.frob_sq();
        if frob == 0.0 {
            return Err(Error::UndefinedMetric("matrix is zero".into()));
        }
        let mut rng = SketchRng::new(COV_ERR_SEED);
        let mut failure = None;
        let lambda = spectral_norm_sym(
            |x| {
                let step = || -> Result<Vec<f64>> {
                    let mut y = at.matvec(&a.matvec(x)?)?;
                    let bt_bx = b.tmul_vec(&b.mul_vec(x)?)?;
                    y.iter_mut().zip(&bt_bx).for_each(|(u, v)| *u -= v);
                    Ok(y)
                };
                step().unwrap_or_else(|e| {
                    failure = Some(e);
                    vec![f64::NAN; x.len()]
                })
            },
            a.cols(),
            self.iterations,
            &mut rng,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(lambda?.abs() / frob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::SyntheticSpec;

    fn orth_rows() -> SparseBuffer {
        let m = DenseMatrix::from_rows(&[
            [3.0, 0.0, 0.0, 0.0],
            [0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        SparseBuffer::from_dense(&m)
    }

    #[test]
    fn tail_of_orthogonal_rows() {
        let a = orth_rows();
        for t in [
            exact_tail_dense(&a, 1).unwrap(),
            exact_tail_randomized(&a, 1).unwrap(),
        ] {
            assert!((t.energy - 5.0).abs() < 1e-12);
            assert!((t.top[0] - 3.0).abs() < 1e-12);
        }
        assert_eq!(exact_tail(&a, 0).unwrap().energy, 14.0);
    }

    #[test]
    fn randomized_tail_matches_dense() {
        let a = SyntheticSpec::new(80, 40, 6, 2).generate().unwrap();
        let dense = exact_tail_dense(&a, 10).unwrap();
        let rand = exact_tail_randomized(&a, 10).unwrap();
        assert!((dense.energy - rand.energy).abs() <= 1e-8 * dense.energy);
    }

    #[test]
    fn projection_onto_own_subspace_is_optimal() {
        let a = SyntheticSpec::new(30, 12, 4, 5).generate().unwrap();
        let b = a.densify(usize::MAX).unwrap();
        let pe = proj_err(&a, &b, 3).unwrap();
        assert!((pe - 1.0).abs() < 1e-9, "{pe}");
        assert_eq!(proj_err(&a, &b, 0).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_inputs_are_flagged() {
        let a = orth_rows();
        let zero = DenseMatrix::zeros(3, 4);
        assert!(matches!(
            proj_err(&a, &zero, 1),
            Err(Error::UndefinedMetric(_))
        ));
        // rank 3 matrix: the rank-3 tail is zero
        let b = a.densify(usize::MAX).unwrap();
        assert!(matches!(
            proj_err(&a, &b, 3),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(
            cov_err(&SparseBuffer::new(4), &zero),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn covariance_error_extremes() {
        let a = orth_rows();
        let zero = DenseMatrix::zeros(3, 4);
        assert!((cov_err(&a, &zero).unwrap() - 9.0 / 14.0).abs() < 1e-10);
        let b = a.densify(usize::MAX).unwrap();
        assert!(cov_err(&a, &b).unwrap() <= 1e-8);
    }
}
