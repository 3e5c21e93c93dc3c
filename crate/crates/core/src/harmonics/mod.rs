//! Scalar and divergence-free vector spherical-harmonic transforms.

mod field;
mod grid;
mod legendre;
mod transform;

pub use field::{FieldKind, ScalarGridField, SpectralField, TangentGridField};
pub use grid::{dealiased_size, gauss_legendre_grid, QuadratureGrid};
pub use legendre::{eval_ylm, tri_index, tri_len, LegendreTable};
pub use transform::SphericalTransform;

/// Eigenvalue `l(l+1)` of `−Δ` on degree-`l` harmonics.
#[inline]
pub fn laplace_eigenvalue(l: usize) -> f64 {
    (l * (l + 1)) as f64
}
