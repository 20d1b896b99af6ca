use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SketchRng;
use crate::sparse::{SparseBuffer, SparseRow};

/// Parameters of the synthetic ±1 stream: every row has exactly `z` nonzeros,
/// each landing in the first `head_cols()` columns with probability `p_head`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub z: usize,
    pub p_head: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub const DEFAULT_P_HEAD: f64 = 0.9;

    pub fn new(n: usize, d: usize, z: usize, seed: u64) -> Self {
        SyntheticSpec {
            n,
            d,
            z,
            p_head: Self::DEFAULT_P_HEAD,
            seed,
        }
    }

    /// `min(ceil(1.5·z), d)`.
    pub fn head_cols(&self) -> usize {
        (3 * self.z).div_ceil(2).min(self.d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.z > self.d {
            return Err(Error::invalid(format!(
                "{} nonzeros per row do not fit in {} columns",
                self.z, self.d
            )));
        }
        if !(0.0..=1.0).contains(&self.p_head) {
            return Err(Error::invalid(format!(
                "head probability {} outside [0,1]",
                self.p_head
            )));
        }
        Ok(())
    }

    /// Lazily generated rows, in stream order.
    pub fn rows(&self) -> Result<SyntheticRows> {
        self.validate()?;
        Ok(SyntheticRows {
            spec: self.clone(),
            rng: SketchRng::new(self.seed),
            used: vec![false; self.d],
            emitted: 0,
        })
    }

    pub fn generate(&self) -> Result<SparseBuffer> {
        let mut buf = SparseBuffer::with_capacity(self.d, self.n * self.z);
        for row in self.rows()? {
            buf.append_row(&row)?;
        }
        Ok(buf)
    }
}

pub struct SyntheticRows {
    spec: SyntheticSpec,
    rng: SketchRng,
    used: Vec<bool>,
    emitted: usize,
}

impl SyntheticRows {
    fn next_row(&mut self) -> SparseRow {
        let (d, z) = (self.spec.d, self.spec.z);
        let head = self.spec.head_cols();
        let tail = d - head;
        let (mut in_head, mut in_tail) = (0, 0);
        let mut pairs = Vec::with_capacity(z);
        for _ in 0..z {
            let mut pick_head = self.rng.chance(self.spec.p_head);
            if pick_head && in_head == head {
                pick_head = false;
            } else if !pick_head && in_tail == tail {
                pick_head = true;
            }
            let col = loop {
                let c = if pick_head {
                    self.rng.below(head)
                } else {
                    head + self.rng.below(tail)
                };
                if !self.used[c] {
                    break c;
                }
            };
            self.used[col] = true;
            if pick_head {
                in_head += 1;
            } else {
                in_tail += 1;
            }
            pairs.push((col, self.rng.sign()));
        }
        for &(c, _) in &pairs {
            self.used[c] = false;
        }
        SparseRow::from_pairs(pairs).expect("columns are distinct")
    }
}

impl Iterator for SyntheticRows {
    type Item = SparseRow;

    fn next(&mut self) -> Option<SparseRow> {
        if self.emitted == self.spec.n {
            return None;
        }
        self.emitted += 1;
        Some(self.next_row())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.spec.n - self.emitted;
        (left, Some(left))
    }
}
