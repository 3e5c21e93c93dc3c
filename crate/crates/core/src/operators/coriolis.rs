use num_complex::Complex64;

use super::OperatorContext;
use crate::error::Result;
use crate::harmonics::{laplace_eigenvalue, SpectralField, TangentGridField};

/// How `C = P C₁` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoriolisPath {
    /// Form `2Ω cosθ (x̂ × u)` on the grid, then Leray-project.
    Grid,
    /// Diagonal multiplier on stream coefficients.
    Spectral,
}

/// Multiplier of `C` on the stream coefficient `ψ_{l,m}`: `−i·2Ω·m / l(l+1)`.
///
/// For `u = Curl ψ`, `x̂ × u = ∇ψ`, and `curl(2Ω cosθ ∇ψ) = −2Ω ∂_φ ψ`.
#[inline]
pub fn coriolis_multiplier(l: usize, m: usize, omega: f64) -> Complex64 {
    Complex64::new(0.0, -2.0 * omega * m as f64 / laplace_eigenvalue(l))
}

pub fn coriolis_apply(
    u: &SpectralField,
    ctx: &OperatorContext,
    path: CoriolisPath,
) -> Result<SpectralField> {
    ctx.check_field(u)?;
    match path {
        CoriolisPath::Spectral => Ok(u.map_modes(|l, m| coriolis_multiplier(l, m, ctx.omega))),
        CoriolisPath::Grid => {
            let t = ctx.transform();
            let grid = t.grid();
            let vel = t.vector_synthesis(u)?;
            let mut w = TangentGridField::zeros(grid);
            for ring in 0..grid.n_lat {
                let f = 2.0 * ctx.omega * grid.mu[ring];
                for j in 0..grid.n_lon {
                    let k = ring * grid.n_lon + j;
                    // x̂ × (a e_θ + b e_φ) = a e_φ − b e_θ
                    w.theta[k] = -f * vel.phi[k];
                    w.phi[k] = f * vel.theta[k];
                }
            }
            t.vector_analysis(&w)
        }
    }
}
