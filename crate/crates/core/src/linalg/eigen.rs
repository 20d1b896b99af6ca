use crate::error::{Error, Result};

use super::dense::DenseMatrix;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;
const QL_MAX_ITER: usize = 60;

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: DenseMatrix,
    /// Jacobi sweeps or QL iterations spent.
    pub sweeps: usize,
}

fn check_symmetric_input(m: &DenseMatrix) -> Result<usize> {
    let (n, c) = m.shape();
    if n != c {
        return Err(Error::dims(format!(
            "eigensolver needs a square matrix, got {n}x{c}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eigensolver input"));
    }
    Ok(n)
}

/// Cyclic Jacobi eigensolver for small symmetric matrices. Iterates until the
/// off-diagonal Frobenius norm drops below `1e-12 · ‖M‖_F`.
pub fn sym_eigen_jacobi(m: &DenseMatrix) -> Result<SymEigen> {
    let n = check_symmetric_input(m)?;
    let mut a = m.as_slice().to_vec();
    let mut v = DenseMatrix::identity(n).into_vec();
    let tol = JACOBI_REL_TOL * m.frob_sq().sqrt();
    // rotations below this size cannot move the off-norm above tol on their own
    let skip = if n > 1 { tol / n as f64 } else { 0.0 };

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        if off_norm(&a) <= tol {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence {
                what: "Jacobi eigensolver",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let mut t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
                if theta < 0.0 {
                    t = -t;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r * n + p];
                    let h = a[r * n + q];
                    let np = g - s * (h + g * tau);
                    let nq = h + s * (g - h * tau);
                    a[r * n + p] = np;
                    a[p * n + r] = np;
                    a[r * n + q] = nq;
                    a[q * n + r] = nq;
                }
                for r in 0..n {
                    let g = v[r * n + p];
                    let h = v[r * n + q];
                    v[r * n + p] = g - s * (h + g * tau);
                    v[r * n + q] = h + s * (g - h * tau);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, col, v[r * n + src]);
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Full eigen-decomposition by Householder tridiagonalization and implicit
/// QL with accumulated transformations. The cost is close to a fixed
/// multiple of n³ whatever the spectrum. Only the lower triangle is read.
pub fn sym_eigen_ql(m: &DenseMatrix) -> Result<SymEigen> {
    let n = check_symmetric_input(m)?;
    let mut a = m.as_slice().to_vec();
    let (mut d, mut e) = tridiagonalize(&mut a, n, true);
    // rows of `a` now hold the transformation as row vectors
    let mut zt = DenseMatrix::from_vec(n, n, a)?.transpose().into_vec();
    let iterations = tridiagonal_ql(&mut d, &mut e, Some(&mut zt))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = &zt[src * n..(src + 1) * n];
        for (r, &x) in v.iter().enumerate() {
            vectors.set(r, col, x);
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps: iterations,
    })
}

/// All eigenvalues of a symmetric matrix, descending; the values-only form
/// of [`sym_eigen_ql`]. Only the lower triangle is read.
pub fn sym_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    let n = check_symmetric_input(m)?;
    let mut a = m.as_slice().to_vec();
    let (mut d, mut e) = tridiagonalize(&mut a, n, false);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(|x, y| y.total_cmp(x));
    Ok(d)
}

/// Householder reduction of the row-major n×n symmetric `a` to tridiagonal
/// form `(diagonal, subdiagonal)` with the subdiagonal in `e[1..]`. With
/// `vectors`, `a` is overwritten by the orthogonal transformation (column
/// j is the j-th basis vector).
fn tridiagonalize(a: &mut [f64], n: usize, vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..i).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..i {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..i {
                    if vectors {
                        a[j * n + i] = a[i * n + j] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..i {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    if n > 0 {
        d[0] = 0.0;
        e[0] = 0.0;
    }
    for i in 0..n {
        if vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[i * n + k] * a[k * n + j];
                    }
                    for k in 0..i {
                        a[k * n + j] -= g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for j in 0..i {
                a[j * n + i] = 0.0;
                a[i * n + j] = 0.0;
            }
        } else {
            d[i] = a[i * n + i];
        }
    }
    (d, e)
}

/// Implicit QL with Wilkinson shifts on a tridiagonal matrix. `zt` holds
/// basis vectors as rows and receives the same rotations. Returns the total
/// number of QL iterations.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>) -> Result<usize> {
    let n = d.len();
    if n == 0 {
        return Ok(0);
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut total = 0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            total += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NonConvergence {
                    what: "tridiagonal QL",
                    iterations: iter,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (x, y) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *y;
                        *y = s * *x + c * f;
                        *x = c * *x - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, SketchRng};

    fn random_sym(n: usize, seed: u64) -> DenseMatrix {
        let g = gaussian_matrix(n, n, &mut SketchRng::new(seed));
        let mut s = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s.set(i, j, g.get(i, j) + g.get(j, i));
            }
        }
        s
    }

    // closed-form roots of the 2x2 characteristic polynomial
    fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean + rad, mean - rad)
    }

    #[test]
    fn jacobi_2x2_matches_characteristic_roots() {
        let m = DenseMatrix::from_rows(&[[4.0, 1.5], [1.5, -2.0]]).unwrap();
        let e = sym_eigen_jacobi(&m).unwrap();
        let (l1, l2) = eig2(4.0, 1.5, -2.0);
        assert!((e.values[0] - l1).abs() < 1e-13);
        assert!((e.values[1] - l2).abs() < 1e-13);
    }

    #[test]
    fn jacobi_reconstructs_and_is_orthonormal() {
        let m = random_sym(12, 4);
        let e = sym_eigen_jacobi(&m).unwrap();
        let v = &e.vectors;
        let vtv = v.transpose().matmul(v).unwrap();
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(12)) < 1e-12);
        let mut lam = DenseMatrix::zeros(12, 12);
        for i in 0..12 {
            lam.set(i, i, e.values[i]);
        }
        let rec = v.matmul(&lam).unwrap().matmul(&v.transpose()).unwrap();
        assert!(rec.max_abs_diff(&m) < 1e-11);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ql_agrees_with_jacobi() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (9, 4), (40, 5)] {
            let m = random_sym(n, seed);
            let j = sym_eigen_jacobi(&m).unwrap().values;
            let q = sym_eigenvalues(&m).unwrap();
            for (a, b) in j.iter().zip(&q) {
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn ql_vectors_reconstruct() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (30, 4)] {
            let m = random_sym(n, seed);
            let e = sym_eigen_ql(&m).unwrap();
            let v = &e.vectors;
            assert!(
                v.transpose()
                    .matmul(v)
                    .unwrap()
                    .max_abs_diff(&DenseMatrix::identity(n))
                    < 1e-12
            );
            let mut lam = DenseMatrix::zeros(n, n);
            for i in 0..n {
                lam.set(i, i, e.values[i]);
            }
            let rec = v.matmul(&lam).unwrap().matmul(&v.transpose()).unwrap();
            assert!(rec.max_abs_diff(&m) < 1e-11 * (1.0 + m.frob_sq().sqrt()));
            let j = sym_eigen_jacobi(&m).unwrap().values;
            for (a, b) in j.iter().zip(&e.values) {
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn ql_handles_low_rank_and_repeated_values() {
        let g = gaussian_matrix(3, 20, &mut SketchRng::new(9));
        let m = g.gram_cols();
        let e = sym_eigen_ql(&m).unwrap();
        assert!(e.values[3..].iter().all(|v| v.abs() < 1e-12 * e.values[0]));
        let i = sym_eigen_ql(&DenseMatrix::identity(6)).unwrap();
        assert_eq!(i.values, vec![1.0; 6]);
        assert_eq!(i.vectors, DenseMatrix::identity(6));
    }

    #[test]
    fn diagonal_and_empty_inputs() {
        let m =
            DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        assert_eq!(sym_eigen_jacobi(&m).unwrap().values, vec![3.0, 2.0, 1.0]);
        assert_eq!(sym_eigenvalues(&m).unwrap(), vec![3.0, 2.0, 1.0]);
        assert!(sym_eigenvalues(&DenseMatrix::zeros(0, 0))
            .unwrap()
            .is_empty());
        assert_eq!(sym_eigen_ql(&m).unwrap().values, vec![3.0, 2.0, 1.0]);
        assert!(sym_eigen_ql(&DenseMatrix::zeros(0, 0))
            .unwrap()
            .values
            .is_empty());
        assert!(sym_eigen_jacobi(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
