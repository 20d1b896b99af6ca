use crate::error::{Error, Result};
use crate::par;

use super::dense::{axpy, norm, DenseMatrix};
use super::eigen::sym_eigen_ql;

/// Directions whose `‖Aᵀu‖` falls below this fraction of σ₁ count as rank
/// deficient: zero singular value and zero right vector.
const RANK_REL_TOL: f64 = 1e-10;

/// Truncated SVD `A ≈ U·diag(σ)·Vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// m×r, orthonormal columns.
    pub left: DenseMatrix,
    /// Descending, nonnegative.
    pub singular: Vec<f64>,
    /// Vᵀ stored as r×d; rows at index ≥ `rank` are zero.
    pub right_t: DenseMatrix,
    /// Number of singular values at or above the rank threshold.
    pub rank: usize,
}

impl SvdResult {
    /// Right singular vectors as a d×r matrix.
    pub fn right(&self) -> DenseMatrix {
        self.right_t.transpose()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.singular.len()
    }
}

/// Top-`r` singular triplets of a short-fat matrix through its m×m Gram
/// matrix and the tridiagonal QL eigensolver.
pub fn svd_top(a: &DenseMatrix, r: usize) -> Result<SvdResult> {
    let m = a.rows();
    if r == 0 || r > m {
        return Err(Error::dims(format!(
            "requested rank {r} for a matrix with {m} rows"
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("svd_top input"));
    }
    let eig = sym_eigen_ql(&a.gram_rows())?;

    let mut singular: Vec<f64> = eig.values[..r].iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut left = DenseMatrix::zeros(m, r);
    for i in 0..m {
        for j in 0..r {
            left.set(i, j, eig.vectors.get(i, j));
        }
    }

    // Aᵀu_i has norm σ_i up to ε·σ₁, so it resolves rank far below the
    // ~sqrt(ε)·σ₁ noise floor of the Gram eigenvalues
    let mut right_t = combine_rows(a, &left, &vec![1.0; r]);
    let cutoff = RANK_REL_TOL * singular[0];
    let rank = (0..r)
        .take_while(|&i| singular[i] > 0.0 && norm(right_t.row(i)) >= cutoff)
        .count();
    for (i, s) in singular.iter_mut().enumerate() {
        let row = right_t.row_mut(i);
        if i < rank {
            let inv = 1.0 / *s;
            row.iter_mut().for_each(|v| *v *= inv);
        } else {
            row.iter_mut().for_each(|v| *v = 0.0);
            *s = 0.0;
        }
    }

    Ok(SvdResult {
        left,
        singular,
        right_t,
        rank,
    })
}

/// Row `i` of the result is `coeffs[i] · Σ_j u[j][i] · a_j`, i.e.
/// `diag(coeffs) · Uᵀ · A`. Zero coefficients give zero rows.
pub(crate) fn combine_rows(a: &DenseMatrix, u: &DenseMatrix, coeffs: &[f64]) -> DenseMatrix {
    let d = a.cols();
    let mut out = DenseMatrix::zeros(coeffs.len(), d);
    par::for_each_chunk(out.as_mut_slice(), d, |i, orow| {
        let c = coeffs[i];
        if c == 0.0 {
            return;
        }
        for j in 0..a.rows() {
            let w = c * u.get(j, i);
            if w != 0.0 {
                axpy(w, a.row(j), orow);
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, SketchRng};

    fn reconstruct(s: &SvdResult) -> DenseMatrix {
        let mut scaled = s.left.clone();
        for i in 0..scaled.rows() {
            for j in 0..scaled.cols() {
                scaled.set(i, j, scaled.get(i, j) * s.singular[j]);
            }
        }
        scaled.matmul(&s.right_t).unwrap()
    }

    #[test]
    fn diagonal_matrix() {
        let a = DenseMatrix::from_rows(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0]]).unwrap();
        let s = svd_top(&a, 2).unwrap();
        assert!((s.singular[0] - 3.0).abs() < 1e-14);
        assert!((s.singular[1] - 2.0).abs() < 1e-14);
        let v = s.right();
        assert!((v.get(0, 0).abs() - 1.0).abs() < 1e-14);
        assert!((v.get(1, 1).abs() - 1.0).abs() < 1e-14);
        assert_eq!(s.rank, 2);
    }

    #[test]
    fn symmetric_rank_one() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let s = svd_top(&a, 1).unwrap();
        assert!((s.singular[0] - 2.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.right_t.get(0, 0).abs() - h).abs() < 1e-14);
        assert!((s.right_t.get(0, 1).abs() - h).abs() < 1e-14);
        let full = svd_top(&a, 2).unwrap();
        assert!(full.is_rank_deficient());
        assert_eq!(full.right_t.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn random_full_rank_reconstruction() {
        let a = gaussian_matrix(6, 4, &mut SketchRng::new(21));
        // 6 rows but rank 4; request all 4 nonzero triplets
        let s = svd_top(&a, 4).unwrap();
        let sum_sq: f64 = s.singular.iter().map(|v| v * v).sum();
        assert!((sum_sq - a.frob_sq()).abs() <= 1e-8 * a.frob_sq());
        let err = reconstruct(&s).max_abs_diff(&a);
        assert!(err <= 1e-8 * a.frob_sq().sqrt(), "{err}");
        let vtv = s.right_t.matmul(&s.right()).unwrap();
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(4)) < 1e-8);
        let utu = s.left.transpose().matmul(&s.left).unwrap();
        assert!(utu.max_abs_diff(&DenseMatrix::identity(4)) < 1e-8);
    }

    #[test]
    fn three_by_three_against_char_poly() {
        // diag(5, 2) embedded with a rotation: singular values are 5 and 2
        let c = 0.6;
        let s = 0.8;
        let a =
            DenseMatrix::from_rows(&[[5.0 * c, 5.0 * s, 0.0], [-2.0 * s, 2.0 * c, 0.0]]).unwrap();
        let r = svd_top(&a, 2).unwrap();
        assert!((r.singular[0] - 5.0).abs() < 1e-13);
        assert!((r.singular[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn errors() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(svd_top(&a, 0).is_err());
        assert!(svd_top(&a, 3).is_err());
        let mut b = DenseMatrix::zeros(2, 3);
        b.set(0, 0, f64::NAN);
        assert!(matches!(svd_top(&b, 1), Err(Error::NonFinite(_))));
        let z = svd_top(&a, 2).unwrap();
        assert_eq!(z.rank, 0);
        assert_eq!(z.singular, vec![0.0, 0.0]);
    }
}
