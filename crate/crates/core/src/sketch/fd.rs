use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::shrink::dense_shrink;
use crate::sparse::SparseRow;

use super::Sketcher;

/// Frequent Directions with a 2ℓ-row buffer: rows fill free slots and the
/// buffer is shrunk back to ℓ rows whenever it is full.
#[derive(Clone, Debug)]
pub struct FdState {
    ell: usize,
    buf: DenseMatrix,
    fill: usize,
    shrinks: usize,
}

impl FdState {
    pub fn new(ell: usize, d: usize) -> Result<Self> {
        if ell == 0 || ell > d {
            return Err(Error::invalid(format!(
                "sketch size {ell} must lie in [1, d = {d}]"
            )));
        }
        Ok(FdState {
            ell,
            buf: DenseMatrix::zeros(2 * ell, d),
            fill: 0,
            shrinks: 0,
        })
    }

    pub fn cols(&self) -> usize {
        self.buf.cols()
    }

    /// Number of occupied buffer rows.
    pub fn live_rows(&self) -> usize {
        self.fill
    }

    pub fn shrinks(&self) -> usize {
        self.shrinks
    }

    pub fn append_dense(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols() {
            return Err(Error::dims(format!(
                "row of length {} for {} columns",
                row.len(),
                self.cols()
            )));
        }
        self.buf.row_mut(self.fill).copy_from_slice(row);
        self.advance()
    }

    fn advance(&mut self) -> Result<()> {
        self.fill += 1;
        if self.fill == 2 * self.ell {
            self.compact()?;
        }
        Ok(())
    }

    fn compact(&mut self) -> Result<()> {
        let d = self.cols();
        let live =
            DenseMatrix::from_vec(self.fill, d, self.buf.as_slice()[..self.fill * d].to_vec())?;
        let b = dense_shrink(&live, self.ell)?;
        let data = self.buf.as_mut_slice();
        data[..self.ell * d].copy_from_slice(b.as_slice());
        data[self.ell * d..].iter_mut().for_each(|v| *v = 0.0);
        self.fill = self.ell;
        self.shrinks += 1;
        Ok(())
    }
}

impl Sketcher for FdState {
    fn append(&mut self, row: &SparseRow) -> Result<()> {
        if let Some(&last) = row.indices().last() {
            if last >= self.cols() {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    cols: self.cols(),
                });
            }
        }
        // free slots are always zero, so a scatter suffices
        let slot = self.buf.row_mut(self.fill);
        for (&j, &v) in row.indices().iter().zip(row.values()) {
            slot[j] = v;
        }
        self.advance()
    }

    fn finalize(mut self) -> Result<DenseMatrix> {
        if self.fill > self.ell {
            self.compact()?;
        }
        let d = self.cols();
        DenseMatrix::from_vec(self.ell, d, self.buf.as_slice()[..self.ell * d].to_vec())
    }
}
