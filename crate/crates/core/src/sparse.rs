//! Row-streamed sparse storage in CSR layout and the sparse products that
//! keep the sketching cost proportional to the number of stored entries.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::par;

/// Rows per parallel task in `matvec`.
const ROW_BLOCK: usize = 256;

/// One sparse row: strictly increasing column indices and their values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::dims(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        check_sorted(&indices)?;
        Ok(SparseRow { indices, values })
    }

    /// Sorts `(column, value)` pairs by column. Duplicate columns are rejected.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let (indices, values) = pairs.into_iter().unzip();
        Self::new(indices, values)
    }

    /// Keeps the nonzero entries of a dense row.
    pub fn from_dense(row: &[f64]) -> Self {
        let (indices, values) = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        SparseRow { indices, values }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j] = v;
        }
        out
    }
}

fn check_sorted(indices: &[usize]) -> Result<()> {
    for w in indices.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::UnsortedIndices {
                prev: w[0],
                next: w[1],
            });
        }
    }
    Ok(())
}

/// CSR accumulation of streamed rows with running nnz and ‖·‖_F².
#[derive(Clone, Debug, PartialEq)]
pub struct SparseBuffer {
    d: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    frob_sq: f64,
}

impl SparseBuffer {
    pub fn new(d: usize) -> Self {
        assert!(d <= u32::MAX as usize, "column count must fit in u32");
        SparseBuffer {
            d,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
            frob_sq: 0.0,
        }
    }

    pub fn with_capacity(d: usize, nnz: usize) -> Self {
        let mut b = Self::new(d);
        b.indices.reserve(nnz);
        b.values.reserve(nnz);
        b
    }

    /// Builds a buffer from the nonzeros of a dense matrix.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut b = Self::new(m.cols());
        for r in m.row_iter() {
            b.append_row(&SparseRow::from_dense(r))
                .expect("dense rows are in range and sorted");
        }
        b
    }

    pub fn from_rows<'a, I>(d: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SparseRow>,
    {
        let mut b = Self::new(d);
        for r in rows {
            b.append_row(r)?;
        }
        Ok(b)
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }

    /// Recomputes ‖·‖_F² from the stored values.
    pub fn recompute_frob_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn sparse_row(&self, i: usize) -> SparseRow {
        let (idx, val) = self.row(i);
        SparseRow {
            indices: idx.iter().map(|&j| j as usize).collect(),
            values: val.to_vec(),
        }
    }

    pub fn row_iter(&self) -> impl Iterator<Item = (&[u32], &[f64])> + '_ {
        (0..self.rows()).map(move |i| self.row(i))
    }

    pub fn append_row(&mut self, row: &SparseRow) -> Result<()> {
        if let Some(&last) = row.indices.last() {
            if last >= self.d {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    cols: self.d,
                });
            }
        }
        self.indices.extend(row.indices.iter().map(|&j| j as u32));
        self.values.extend_from_slice(&row.values);
        self.frob_sq += row.norm_sq();
        self.indptr.push(self.values.len());
        Ok(())
    }

    pub fn clear(&mut self) {
        self.indptr.truncate(1);
        self.indices.clear();
        self.values.clear();
        self.frob_sq = 0.0;
    }

    /// `A · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::dims(format!(
                "matvec with {} entries for {} columns",
                x.len(),
                self.d
            )));
        }
        let mut out = vec![0.0; self.rows()];
        par::for_each_chunk(&mut out, ROW_BLOCK, |b, chunk| {
            let base = b * ROW_BLOCK;
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = self.row_dot(base + k, x);
            }
        });
        Ok(out)
    }

    /// `Aᵀ · y`, scattering over stored entries in row order.
    pub fn rmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(Error::dims(format!(
                "rmatvec with {} entries for {} rows",
                y.len(),
                self.rows()
            )));
        }
        let mut out = vec![0.0; self.d];
        self.scatter_into(y, &mut out);
        Ok(out)
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&j, &v)| v * x[j as usize]).sum()
    }

    #[inline]
    fn scatter_into(&self, y: &[f64], out: &mut [f64]) {
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                out[j as usize] += v * yi;
            }
        }
    }

    /// `A · Xᵀ` for a block of k vectors given as the rows of `xt` (k×d);
    /// the result is k×m (row j is `A·x_j`). Each vector is one parallel task.
    pub fn mul_block(&self, xt: &DenseMatrix) -> Result<DenseMatrix> {
        if xt.cols() != self.d {
            return Err(Error::dims(format!(
                "block of width {} for {} columns",
                xt.cols(),
                self.d
            )));
        }
        let m = self.rows();
        let mut out = DenseMatrix::zeros(xt.rows(), m);
        par::for_each_chunk(out.as_mut_slice(), m, |j, orow| {
            let x = xt.row(j);
            for (i, o) in orow.iter_mut().enumerate() {
                *o = self.row_dot(i, x);
            }
        });
        Ok(out)
    }

    /// `Aᵀ · Yᵀ` for a block given as the rows of `yt` (k×m); result is k×d.
    pub fn tmul_block(&self, yt: &DenseMatrix) -> Result<DenseMatrix> {
        if yt.cols() != self.rows() {
            return Err(Error::dims(format!(
                "block of width {} for {} rows",
                yt.cols(),
                self.rows()
            )));
        }
        let mut out = DenseMatrix::zeros(yt.rows(), self.d);
        par::for_each_chunk(out.as_mut_slice(), self.d, |j, orow| {
            self.scatter_into(yt.row(j), orow);
        });
        Ok(out)
    }

    /// CSR of the transpose (d×m).
    pub fn transpose(&self) -> SparseBuffer {
        let mut counts = vec![0usize; self.d + 1];
        for &j in &self.indices {
            counts[j as usize + 1] += 1;
        }
        for j in 0..self.d {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, (idx, val)) in self.row_iter().enumerate() {
            for (&j, &v) in idx.iter().zip(val) {
                let slot = next[j as usize];
                indices[slot] = i as u32;
                values[slot] = v;
                next[j as usize] += 1;
            }
        }
        SparseBuffer {
            d: self.rows(),
            indptr,
            indices,
            values,
            frob_sq: self.frob_sq,
        }
    }

    /// Dense copy, refusing when more than `cap` entries are stored.
    pub fn densify(&self, cap: usize) -> Result<DenseMatrix> {
        if self.nnz() > cap {
            return Err(Error::CapExceeded {
                nnz: self.nnz(),
                cap,
            });
        }
        let mut m = DenseMatrix::zeros(self.rows(), self.d);
        for (i, (idx, val)) in self.row_iter().enumerate() {
            let r = m.row_mut(i);
            for (&j, &v) in idx.iter().zip(val) {
                r[j as usize] = v;
            }
        }
        Ok(m)
    }

    /// Dense `AᵀA` (d×d), accumulated row by row from sparse outer products.
    pub fn gram_cols_dense(&self) -> DenseMatrix {
        let d = self.d;
        let mut g = DenseMatrix::zeros(d, d);
        let data = g.as_mut_slice();
        for (idx, val) in self.row_iter() {
            for (a, (&ja, &va)) in idx.iter().zip(val).enumerate() {
                let base = ja as usize * d;
                for (&jb, &vb) in idx[a..].iter().zip(&val[a..]) {
                    data[base + jb as usize] += va * vb;
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                data[i * d + j] = data[j * d + i];
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SketchRng;
    use proptest::prelude::*;

    fn random_buffer(m: usize, d: usize, density: f64, seed: u64) -> SparseBuffer {
        let mut rng = SketchRng::new(seed);
        let mut b = SparseBuffer::new(d);
        for _ in 0..m {
            let mut pairs = Vec::new();
            for j in 0..d {
                if rng.chance(density) {
                    pairs.push((j, rng.gaussian()));
                }
            }
            b.append_row(&SparseRow::from_pairs(pairs).unwrap())
                .unwrap();
        }
        b
    }

    #[test]
    fn append_updates_counters() {
        let mut b = SparseBuffer::new(4);
        b.append_row(&SparseRow::new(vec![0], vec![2.0]).unwrap())
            .unwrap();
        assert_eq!((b.nnz(), b.frob_sq()), (1, 4.0));
        b.append_row(&SparseRow::empty()).unwrap();
        assert_eq!((b.nnz(), b.rows()), (1, 2));
        let c = random_buffer(3, 10, 0.5, 1);
        assert!((c.frob_sq() - c.recompute_frob_sq()).abs() <= 1e-12 * c.frob_sq());
    }

    #[test]
    fn row_validation() {
        assert!(matches!(
            SparseRow::new(vec![2, 1], vec![1.0, 1.0]),
            Err(Error::UnsortedIndices { .. })
        ));
        assert!(SparseRow::from_pairs(vec![(3, 1.0), (3, 2.0)]).is_err());
        assert!(SparseRow::new(vec![1], vec![]).is_err());
        let mut b = SparseBuffer::new(4);
        let r = SparseRow::new(vec![4], vec![1.0]).unwrap();
        assert!(matches!(
            b.append_row(&r),
            Err(Error::IndexOutOfRange { .. })
        ));
        // explicit zeros are stored and counted
        b.append_row(&SparseRow::new(vec![0, 1], vec![0.0, 1.0]).unwrap())
            .unwrap();
        assert_eq!(b.nnz(), 2);
    }

    #[test]
    fn products_small() {
        let mut b = SparseBuffer::new(3);
        b.append_row(&SparseRow::new(vec![0], vec![2.0]).unwrap())
            .unwrap();
        assert_eq!(b.matvec(&[1.0, 0.0, 0.0]).unwrap(), vec![2.0]);
        assert_eq!(b.matvec(&[0.0; 3]).unwrap(), vec![0.0]);
        assert_eq!(b.rmatvec(&[1.0]).unwrap(), vec![2.0, 0.0, 0.0]);
        assert_eq!(b.rmatvec(&[0.0]).unwrap(), vec![0.0; 3]);
        assert!(b.matvec(&[1.0]).is_err());
        assert!(b.rmatvec(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn densify_paths() {
        let b = SparseBuffer::new(5);
        assert_eq!(b.densify(0).unwrap().shape(), (0, 5));
        let mut b = SparseBuffer::new(3);
        b.append_row(&SparseRow::new(vec![0], vec![2.0]).unwrap())
            .unwrap();
        b.append_row(&SparseRow::new(vec![1], vec![1.0]).unwrap())
            .unwrap();
        let m = b.densify(6).unwrap();
        assert_eq!(m.as_slice(), &[2.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(b.densify(1), Err(Error::CapExceeded { .. })));
        assert_eq!(SparseBuffer::from_dense(&m), b);
    }

    #[test]
    fn transpose_and_gram() {
        let b = random_buffer(20, 10, 0.3, 5);
        let dense = b.densify(usize::MAX).unwrap();
        assert_eq!(
            b.transpose().densify(usize::MAX).unwrap(),
            dense.transpose()
        );
        let g = b.gram_cols_dense();
        assert!(g.max_abs_diff(&dense.gram_cols()) < 1e-12);
    }

    #[test]
    fn block_products_match_columnwise() {
        let b = random_buffer(15, 9, 0.4, 2);
        let mut rng = SketchRng::new(3);
        let xt = crate::linalg::gaussian_matrix(4, 9, &mut rng);
        let y = b.mul_block(&xt).unwrap();
        for j in 0..4 {
            assert_eq!(y.row(j), b.matvec(xt.row(j)).unwrap().as_slice());
        }
        let w = b.tmul_block(&y).unwrap();
        for j in 0..4 {
            assert_eq!(w.row(j), b.rmatvec(y.row(j)).unwrap().as_slice());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn products_match_dense(seed in any::<u64>(), m in 1usize..50, d in 1usize..50) {
            let b = random_buffer(m, d, 0.2, seed);
            let dense = b.densify(usize::MAX).unwrap();
            let mut rng = SketchRng::new(seed ^ 0x5eed);
            let x: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.gaussian()).collect();
            for (a, e) in b.matvec(&x).unwrap().iter().zip(dense.mul_vec(&x).unwrap()) {
                prop_assert!((a - e).abs() <= 1e-12 * (1.0 + e.abs()));
            }
            for (a, e) in b.rmatvec(&y).unwrap().iter().zip(dense.tmul_vec(&y).unwrap()) {
                prop_assert!((a - e).abs() <= 1e-12 * (1.0 + e.abs()));
            }
            let nnz_before = b.nnz();
            let mut b2 = b.clone();
            let extra = SparseRow::from_dense(&x);
            b2.append_row(&extra).unwrap();
            prop_assert_eq!(b2.nnz(), nnz_before + extra.nnz());
            prop_assert!((b2.frob_sq() - b2.recompute_frob_sq()).abs() <= 1e-12 * b2.frob_sq().max(1e-300));
        }
    }
}
