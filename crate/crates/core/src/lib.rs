//! Streaming matrix sketching.
//!
//! Rows of an n×d matrix `A` arrive one at a time; the sketchers here keep an
//! ℓ×d matrix `B` with `BᵀB ⪯ AᵀA` and `‖AᵀA − BᵀB‖₂` bounded by the tail
//! energy of `A`. [`sketch::FdState`] is the exact-SVD Frequent Directions
//! baseline; [`sketch::SfdState`] buffers sparse rows and shrinks them with
//! randomized subspace iteration, so its cost follows nnz(A) instead of n·d.
//!
//! Enable the default `parallel` feature to run the block kernels on rayon.

pub mod bench;
pub mod error;
pub mod io;
pub mod linalg;
mod par;
pub mod randsvd;
pub mod shrink;
pub mod sketch;
pub mod sparse;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SketchRng};
pub use par::mode as execution_mode;
pub use randsvd::PowerConfig;
pub use sketch::{Algo, AnySketcher, FdState, SfdState, SketchConfig, Sketcher};
pub use sparse::{SparseBuffer, SparseRow};
