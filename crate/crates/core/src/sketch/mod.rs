//! Streaming sketch drivers: the dense Frequent Directions baseline, the
//! sparse-input variant, and shard merging.

mod fd;
mod sfd;

use serde::{Deserialize, Serialize};

pub use fd::FdState;
pub use sfd::{SfdState, SfdStats};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::par;
use crate::randsvd::PowerConfig;
use crate::shrink::{dense_shrink, VerifierState};
use crate::sparse::{SparseBuffer, SparseRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Fd,
    Sfd,
}

impl Algo {
    pub fn tag(self) -> &'static str {
        match self {
            Algo::Fd => "fd",
            Algo::Sfd => "sfd",
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd" => Ok(Algo::Fd),
            "sfd" => Ok(Algo::Sfd),
            other => Err(Error::invalid(format!(
                "unknown algorithm '{other}' (expected fd or sfd)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    /// Sketch rows ℓ, 1 ≤ ℓ ≤ d.
    pub ell: usize,
    pub d: usize,
    /// Failure budget shared by all verifier calls of one run.
    pub delta: f64,
    pub power: PowerConfig,
    pub c_verify: f64,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(ell: usize, d: usize) -> Self {
        SketchConfig {
            ell,
            d,
            delta: 0.1,
            power: PowerConfig::default(),
            c_verify: VerifierState::DEFAULT_C_VERIFY,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_power(mut self, power: PowerConfig) -> Self {
        self.power = power;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 || self.ell > self.d {
            return Err(Error::invalid(format!(
                "sketch size {} must lie in [1, d = {}]",
                self.ell, self.d
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        self.power.validate()
    }
}

/// A single-pass row sketcher.
pub trait Sketcher {
    fn append(&mut self, row: &SparseRow) -> Result<()>;
    fn finalize(self) -> Result<DenseMatrix>;
}

/// Either sketcher behind one type, for callers that pick at runtime.
#[allow(clippy::large_enum_variant)]
pub enum AnySketcher {
    Fd(FdState),
    Sfd(SfdState),
}

impl AnySketcher {
    pub fn new(algo: Algo, cfg: &SketchConfig) -> Result<Self> {
        Ok(match algo {
            Algo::Fd => AnySketcher::Fd(FdState::new(cfg.ell, cfg.d)?),
            Algo::Sfd => AnySketcher::Sfd(SfdState::new(cfg.clone())?),
        })
    }

    /// Run statistics of the sparse sketcher; `None` for FD.
    pub fn sfd_stats(&self) -> Option<SfdStats> {
        match self {
            AnySketcher::Fd(_) => None,
            AnySketcher::Sfd(s) => Some(s.stats()),
        }
    }
}

impl Sketcher for AnySketcher {
    fn append(&mut self, row: &SparseRow) -> Result<()> {
        match self {
            AnySketcher::Fd(s) => s.append(row),
            AnySketcher::Sfd(s) => s.append(row),
        }
    }

    fn finalize(self) -> Result<DenseMatrix> {
        match self {
            AnySketcher::Fd(s) => s.finalize(),
            AnySketcher::Sfd(s) => s.finalize(),
        }
    }
}

/// Streams every row of `a` through a fresh sketcher.
pub fn sketch_matrix(algo: Algo, a: &SparseBuffer, cfg: &SketchConfig) -> Result<DenseMatrix> {
    if a.cols() != cfg.d {
        return Err(Error::dims(format!(
            "matrix has {} columns, config says {}",
            a.cols(),
            cfg.d
        )));
    }
    let mut s = AnySketcher::new(algo, cfg)?;
    for i in 0..a.rows() {
        s.append(&a.sparse_row(i))?;
    }
    s.finalize()
}

/// Combines two ℓ×d sketches into one.
pub fn merge(b1: &DenseMatrix, b2: &DenseMatrix, ell: usize) -> Result<DenseMatrix> {
    if b1.cols() != b2.cols() {
        return Err(Error::dims(format!(
            "cannot merge sketches with {} and {} columns",
            b1.cols(),
            b2.cols()
        )));
    }
    dense_shrink(&b1.vstack(b2)?, ell)
}

/// Seed for shard `i`, so shards never share a random stream.
pub fn shard_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Sketches each shard independently (in parallel when enabled) and merges
/// the results left to right.
pub fn sketch_sharded(
    algo: Algo,
    shards: &[SparseBuffer],
    cfg: &SketchConfig,
) -> Result<DenseMatrix> {
    cfg.validate()?;
    let parts = par::map_range(shards.len(), |i| {
        let shard_cfg = cfg.clone().with_seed(shard_seed(cfg.seed, i));
        sketch_matrix(algo, &shards[i], &shard_cfg)
    });
    let mut acc = DenseMatrix::zeros(cfg.ell, cfg.d);
    for p in parts {
        acc = merge(&acc, &p?, cfg.ell)?;
    }
    Ok(acc)
}
