use crate::error::{Error, Result};

use super::dense::{axpy, dot, norm, DenseMatrix};

const DEPENDENT_REL_TOL: f64 = 1e-12;

/// Orthonormalizes the columns of an n×k matrix (n ≥ k).
///
/// Modified Gram–Schmidt with one reorthogonalization pass. A column whose
/// residual falls below `1e-12` times the largest input column norm is set
/// to zero rather than completed, so the output spans exactly span(M).
pub fn orthonormalize(m: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, k) = m.shape();
    if n < k {
        return Err(Error::dims(format!(
            "cannot orthonormalize {k} columns of length {n}"
        )));
    }
    let mut t = m.transpose();
    orthonormalize_rows(&mut t);
    Ok(t.transpose())
}

/// Same as [`orthonormalize`], operating in place on the rows of a k×n
/// matrix. Returns the number of nonzero rows left.
pub fn orthonormalize_rows(m: &mut DenseMatrix) -> usize {
    let k = m.rows();
    let largest = m.row_iter().map(norm).fold(0.0, f64::max);
    let threshold = DEPENDENT_REL_TOL * largest;
    let mut live = Vec::with_capacity(k);
    let n = m.cols();
    for i in 0..k {
        let (done, rest) = m.as_mut_slice().split_at_mut(i * n);
        let v = &mut rest[..n];
        for _pass in 0..2 {
            for &j in &live {
                let q = &done[j * n..(j + 1) * n];
                let c = dot(q, v);
                axpy(-c, q, v);
            }
        }
        let nrm = norm(v);
        if largest == 0.0 || nrm < threshold || nrm == 0.0 {
            v.iter_mut().for_each(|x| *x = 0.0);
        } else {
            v.iter_mut().for_each(|x| *x /= nrm);
            live.push(i);
        }
    }
    live.len()
}
