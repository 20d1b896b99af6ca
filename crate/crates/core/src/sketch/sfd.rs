use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{DenseMatrix, SketchRng};
use crate::shrink::{boosted_sparse_shrink, dense_shrink, VerifierState};
use crate::sparse::{SparseBuffer, SparseRow};

use super::{SketchConfig, Sketcher};

/// Sparse Frequent Directions: rows accumulate in a sparse buffer until it
/// holds ℓ·d entries or d rows, then the buffer is shrunk with the verified
/// randomized shrink and folded into the running sketch.
#[derive(Clone, Debug)]
pub struct SfdState {
    cfg: SketchConfig,
    sketch: DenseMatrix,
    buffer: SparseBuffer,
    verifier: VerifierState,
    rng: SketchRng,
    stats: SfdStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SfdStats {
    pub rows_seen: usize,
    pub flushes: usize,
    /// Sparse-shrink runs across all flushes (≥ flushes).
    pub attempts: usize,
    pub verifier_calls: u64,
    /// Σ δ_i over all verifier calls.
    pub delta_spent: f64,
}

impl SfdState {
    pub fn new(cfg: SketchConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(SfdState {
            sketch: DenseMatrix::zeros(cfg.ell, cfg.d),
            buffer: SparseBuffer::with_capacity(cfg.d, cfg.ell * cfg.d),
            verifier: VerifierState::new(cfg.delta, cfg.c_verify)?,
            rng: SketchRng::new(cfg.seed),
            stats: SfdStats::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &SketchConfig {
        &self.cfg
    }

    /// Current sketch of the flushed rows (buffered rows not included).
    pub fn sketch(&self) -> &DenseMatrix {
        &self.sketch
    }

    pub fn buffer(&self) -> &SparseBuffer {
        &self.buffer
    }

    pub fn stats(&self) -> SfdStats {
        SfdStats {
            verifier_calls: self.verifier.calls(),
            delta_spent: self.verifier.spent(),
            ..self.stats
        }
    }

    fn buffer_full(&self) -> bool {
        self.buffer.nnz() >= self.cfg.ell * self.cfg.d || self.buffer.rows() == self.cfg.d
    }

    fn flush(&mut self) -> Result<()> {
        let ell = self.cfg.ell;
        let report = boosted_sparse_shrink(
            &self.buffer,
            ell,
            &mut self.verifier,
            &self.cfg.power,
            &mut self.rng,
        )?;
        self.sketch = dense_shrink(&self.sketch.vstack(&report.sketch)?, ell)?;
        self.buffer.clear();
        self.stats.flushes += 1;
        self.stats.attempts += report.attempts;
        Ok(())
    }
}

impl Sketcher for SfdState {
    fn append(&mut self, row: &SparseRow) -> Result<()> {
        self.buffer.append_row(row)?;
        self.stats.rows_seen += 1;
        if self.buffer_full() {
            self.flush()?;
        }
        Ok(())
    }

    fn finalize(mut self) -> Result<DenseMatrix> {
        if self.buffer.is_empty() {
            return Ok(self.sketch);
        }
        let ell = self.cfg.ell;
        if self.buffer.rows() >= ell {
            self.flush()?;
            return Ok(self.sketch);
        }
        // fewer than ℓ rows: at most ℓ·d entries by the buffer invariant
        let rest = self.buffer.densify(ell * self.cfg.d)?;
        dense_shrink(&self.sketch.vstack(&rest)?, ell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(ell: usize, d: usize) -> SketchConfig {
        SketchConfig::new(ell, d).with_seed(7)
    }

    #[test]
    fn first_row_only_buffers() {
        let mut s = SfdState::new(cfg(2, 5)).unwrap();
        s.append(&SparseRow::new(vec![1], vec![1.0]).unwrap())
            .unwrap();
        assert_eq!(s.sketch(), &DenseMatrix::zeros(2, 5));
        assert_eq!(s.buffer().rows(), 1);
        assert_eq!(s.stats().flushes, 0);
    }

    #[test]
    fn dense_rows_trigger_on_nnz() {
        let (ell, d) = (3, 6);
        let mut s = SfdState::new(cfg(ell, d)).unwrap();
        for r in 0..ell {
            let row: Vec<f64> = (0..d).map(|j| (r * d + j) as f64 + 1.0).collect();
            s.append(&SparseRow::from_dense(&row)).unwrap();
            let expect = usize::from(r + 1 == ell);
            assert_eq!(s.stats().flushes, expect);
        }
        assert!(s.buffer().is_empty());
    }

    #[test]
    fn sparse_rows_trigger_on_row_count() {
        let (ell, d) = (4, 8);
        let mut s = SfdState::new(cfg(ell, d)).unwrap();
        for r in 0..d {
            s.append(&SparseRow::new(vec![r % 3], vec![1.0 + r as f64]).unwrap())
                .unwrap();
            assert_eq!(s.stats().flushes, usize::from(r + 1 == d), "row {r}");
        }
    }

    #[test]
    fn empty_stream_is_zero() {
        let s = SfdState::new(cfg(3, 4)).unwrap();
        assert_eq!(s.finalize().unwrap(), DenseMatrix::zeros(3, 4));
    }

    #[test]
    fn short_stream_takes_dense_path() {
        let (ell, d) = (5, 7);
        let rows = [
            SparseRow::new(vec![0, 3], vec![1.0, -2.0]).unwrap(),
            SparseRow::new(vec![3, 6], vec![0.5, 4.0]).unwrap(),
        ];
        let mut s = SfdState::new(cfg(ell, d)).unwrap();
        for r in &rows {
            s.append(r).unwrap();
        }
        let got = s.finalize().unwrap();
        let dense = DenseMatrix::from_rows(&[rows[0].to_dense(d), rows[1].to_dense(d)]).unwrap();
        let want = dense_shrink(&DenseMatrix::zeros(ell, d).vstack(&dense).unwrap(), ell).unwrap();
        assert_eq!(got, want);
    }
}
