use num_complex::Complex64;

use super::OperatorContext;
use crate::error::Result;
use crate::harmonics::{
    laplace_eigenvalue, FieldKind, ScalarGridField, SpectralField, SphericalTransform,
    TangentGridField,
};

/// Frame components of the covariant derivative `∇_u v` for `u = Curl ψ`,
/// `v = Curl χ`.
fn covariant_derivative(
    t: &SphericalTransform,
    psi: &SpectralField,
    chi: &SpectralField,
) -> Result<TangentGridField> {
    let grid = t.grid();
    let u = t.vector_synthesis(psi)?;

    let chi_t = t.synthesize_partial(chi, true, 0, 0)?;
    let chi_p_s = t.synthesize_partial(chi, false, 1, 1)?;
    let chi_p_s2 = t.synthesize_partial(chi, false, 1, 2)?;
    let chi_tp_s = t.synthesize_partial(chi, true, 1, 1)?;
    let chi_pp_s = t.synthesize_partial(chi, false, 2, 1)?;
    let chi_pp_s2 = t.synthesize_partial(chi, false, 2, 2)?;
    let lap = chi.map_modes(|l, _| Complex64::new(-laplace_eigenvalue(l), 0.0));
    let lap_chi = t.synthesize_partial(&lap, false, 0, 0)?;

    let mut out = TangentGridField::zeros(grid);
    for ring in 0..grid.n_lat {
        let c = grid.mu[ring];
        let s = grid.sin_theta[ring];
        let cot = c / s;
        for j in 0..grid.n_lon {
            let k = ring * grid.n_lon + j;
            let (ut, up) = (u.theta[k], u.phi[k]);
            let vt = chi_p_s[k];
            let vp = -chi_t[k];
            let chi_tt = lap_chi[k] - cot * chi_t[k] - chi_pp_s2[k];
            let dt_vt = chi_tp_s[k] - c * chi_p_s2[k];
            let dp_vt = chi_pp_s[k];
            let dt_vp = -chi_tt;
            // ∂_φ v_φ = −χ_θφ
            let dp_vp = -chi_tp_s[k] * s;
            out.theta[k] = ut * dt_vt + (up / s) * dp_vt - cot * up * vp;
            out.phi[k] = ut * dt_vp + (up / s) * dp_vp + cot * up * vt;
        }
    }
    Ok(out)
}

/// `b(u, v, w) = ∫ ((u·∇) v) · w dS` evaluated by quadrature from the
/// covariant derivative.
pub fn trilinear_b(
    u: &SpectralField,
    v: &SpectralField,
    w: &SpectralField,
    ctx: &OperatorContext,
) -> Result<f64> {
    ctx.check_field(u)?;
    ctx.check_field(v)?;
    ctx.check_field(w)?;
    let t = ctx.transform();
    let cov = covariant_derivative(t, u, v)?;
    let wg = t.vector_synthesis(w)?;
    Ok(t.grid().integrate(&cov.dot(&wg)))
}

/// `B(u, v) = P((u·∇) v)` as a stream function, projected from the grid
/// covariant derivative.
pub fn nonlinear_b_grid_product(
    u: &SpectralField,
    v: &SpectralField,
    ctx: &OperatorContext,
) -> Result<SpectralField> {
    ctx.check_field(u)?;
    ctx.check_field(v)?;
    let t = ctx.transform();
    let cov = covariant_derivative(t, u, v)?;
    t.vector_analysis(&cov)
}

/// `B(u) = P((u·∇) u)` in vorticity form: `curl B(u) = u·∇ζ`, so
/// `B_{l,m} = (u·∇ζ)_{l,m} / l(l+1)`.
pub fn nonlinear_b(u: &SpectralField, ctx: &OperatorContext) -> Result<SpectralField> {
    ctx.check_field(u)?;
    let t = ctx.transform();
    let grid = t.grid();
    let psi_t = t.synthesize_partial(u, true, 0, 0)?;
    let psi_p_s = t.synthesize_partial(u, false, 1, 1)?;
    let zeta = u.map_modes(|l, _| Complex64::new(laplace_eigenvalue(l), 0.0));
    let zeta_t = t.synthesize_partial(&zeta, true, 0, 0)?;
    let zeta_p_s = t.synthesize_partial(&zeta, false, 1, 1)?;

    let values = (0..grid.n_points())
        .map(|k| psi_p_s[k] * zeta_t[k] - psi_t[k] * zeta_p_s[k])
        .collect();
    let q = t.scalar_analysis(&ScalarGridField {
        n_lat: grid.n_lat,
        n_lon: grid.n_lon,
        values,
    })?;
    Ok(q.with_kind(FieldKind::Stream)
        .map_modes(|l, _| Complex64::new(1.0 / laplace_eigenvalue(l), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::super::{h_inner, Spectrum};
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(lmax: usize) -> OperatorContext {
        OperatorContext::dealiased(lmax, 1.0, 0.0, Spectrum::Paper).unwrap()
    }

    fn rand_field(lmax: usize, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::random(lmax, FieldKind::Stream, &mut rng, |l| 1.0 / (l as f64))
    }

    /// Rigid rotation: ψ = cosθ gives u = sinθ e_φ and the centripetal
    /// acceleration (u·∇)u = −sinθ cosθ e_θ, a pure gradient.
    #[test]
    fn rigid_rotation_has_gradient_advection() {
        let c = ctx(4);
        let amp = (4.0 * std::f64::consts::PI / 3.0).sqrt();
        let psi = SpectralField::single_mode(4, FieldKind::Stream, 1, 0, Complex64::new(amp, 0.0))
            .unwrap();
        let u = c.transform().vector_synthesis(&psi).unwrap();
        let g = c.grid();
        for ring in 0..g.n_lat {
            let k = ring * g.n_lon;
            assert!(u.theta[k].abs() < 1e-13);
            assert!((u.phi[k] - g.sin_theta[ring]).abs() < 1e-13);
        }
        let cov = covariant_derivative(c.transform(), &psi, &psi).unwrap();
        for ring in 0..g.n_lat {
            let k = ring * g.n_lon + 3;
            let expected = -g.sin_theta[ring] * g.mu[ring];
            assert!((cov.theta[k] - expected).abs() < 1e-12);
            assert!(cov.phi[k].abs() < 1e-12);
        }
        assert!(nonlinear_b(&psi, &c).unwrap().max_abs() < 1e-13);
        assert!(nonlinear_b_grid_product(&psi, &psi, &c).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn single_mode_self_advection_vanishes() {
        let c = ctx(8);
        for (l, m) in [(1, 1), (2, 1), (3, 0), (5, 4)] {
            let psi = SpectralField::basis_mode(8, l, m).unwrap();
            assert!(nonlinear_b(&psi, &c).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn vorticity_form_matches_trilinear_form() {
        let c = ctx(10);
        for seed in 0..6 {
            let u = rand_field(10, seed);
            let w = rand_field(5, 100 + seed).with_lmax(10);
            let bu = nonlinear_b(&u, &c).unwrap();
            let lhs = h_inner(&bu, &w);
            let rhs = trilinear_b(&u, &u, &w, &c).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn vorticity_form_matches_grid_projection() {
        let c = ctx(9);
        let u = rand_field(9, 42);
        let a = nonlinear_b(&u, &c).unwrap();
        let b = nonlinear_b_grid_product(&u, &u, &c).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9 * (1.0 + a.max_abs()));
    }

    #[test]
    fn energy_conserving() {
        let c = ctx(12);
        for seed in 0..4 {
            let u = rand_field(12, seed);
            let bu = nonlinear_b(&u, &c).unwrap();
            let scale = h_inner(&bu, &bu).sqrt() * h_inner(&u, &u).sqrt();
            assert!(h_inner(&bu, &u).abs() < 1e-10 * scale);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn trilinear_antisymmetric(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000) {
            let c = ctx(7);
            let (u, v, w) = (rand_field(7, s1), rand_field(7, s2 + 7), rand_field(7, s3 + 13));
            let a = trilinear_b(&u, &v, &w, &c).unwrap();
            let b = trilinear_b(&u, &w, &v, &c).unwrap();
            prop_assert!((a + b).abs() < 1e-9 * (1.0 + a.abs()));
            let zero = trilinear_b(&u, &v, &v, &c).unwrap();
            prop_assert!(zero.abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
