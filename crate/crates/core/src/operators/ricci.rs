use num_complex::Complex64;

use super::OperatorContext;
use crate::error::Result;
use crate::harmonics::{laplace_eigenvalue, QuadratureGrid, SpectralField, TangentGridField};

/// Ricci tensor of the unit sphere applied to a tangent field given in
/// orthonormal-frame components.
///
/// In coordinates `Ric = diag(1, sin²θ)` acts on contravariant components
/// `(u^θ, u^φ) = (u_θ, u_φ / sinθ)` and returns covariant ones, which are
/// converted back to the frame by dividing the φ entry by `sinθ`.
pub fn ricci_apply(u: &TangentGridField, grid: &QuadratureGrid) -> Result<TangentGridField> {
    u.check_shape(grid)?;
    let mut out = TangentGridField::zeros(grid);
    for ring in 0..grid.n_lat {
        let s = grid.sin_theta[ring];
        let s2 = s * s;
        for j in 0..grid.n_lon {
            let k = ring * grid.n_lon + j;
            let contra_theta = u.theta[k];
            let contra_phi = u.phi[k] / s;
            let cov_theta = contra_theta;
            let cov_phi = s2 * contra_phi;
            out.theta[k] = cov_theta;
            out.phi[k] = cov_phi / s;
        }
    }
    Ok(out)
}

/// `−L u = −(Δ + 2 Ric) u = Curl curl u − 2 Ric u` for divergence-free `u = Curl ψ`,
/// returned on the grid.
pub fn neg_stress_apply(psi: &SpectralField, ctx: &OperatorContext) -> Result<TangentGridField> {
    ctx.check_field(psi)?;
    let t = ctx.transform();
    let zeta = psi.map_modes(|l, _| Complex64::new(laplace_eigenvalue(l), 0.0));
    let curl_curl = t.vector_synthesis(&zeta)?;
    let u = t.vector_synthesis(psi)?;
    let ric = ricci_apply(&u, t.grid())?;
    Ok(TangentGridField {
        n_lat: u.n_lat,
        n_lon: u.n_lon,
        theta: curl_curl
            .theta
            .iter()
            .zip(&ric.theta)
            .map(|(a, r)| a - 2.0 * r)
            .collect(),
        phi: curl_curl
            .phi
            .iter()
            .zip(&ric.phi)
            .map(|(a, r)| a - 2.0 * r)
            .collect(),
    })
}
