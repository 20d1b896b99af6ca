//! Small dense linear algebra for short-fat matrices.

mod dense;
mod eigen;
mod ortho;
mod power;
mod rng;
mod svd;

pub use dense::{dot, norm, DenseMatrix};
pub use eigen::{sym_eigen_jacobi, sym_eigen_ql, sym_eigenvalues, SymEigen};
pub use ortho::{orthonormalize, orthonormalize_rows};
pub use power::spectral_norm_sym;
pub use rng::{gaussian_matrix, unit_sphere_vector, SketchRng};
pub(crate) use svd::combine_rows;
pub use svd::{svd_top, SvdResult};
