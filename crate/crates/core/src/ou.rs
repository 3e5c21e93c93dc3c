//! Ornstein-Uhlenbeck process `dz + (νA + C + α) z dt = G dL`.
//!
//! The deterministic decay is integrated exactly per mode; the stochastic
//! convolution is a left-endpoint sum over noise substeps.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonics::{laplace_eigenvalue, FieldKind, SpectralField};
use crate::noise::{apply_covariance, check_moment_order, NoiseGenerator, NoiseSpec};
use crate::operators::{coriolis_multiplier, Spectrum};
use crate::stats::loglog_slope;

/// Per-coefficient decay rates `κ = νλ_l + α − i·2Ωm/l(l+1)`, in stream layout.
pub fn decay_rates(
    lmax: usize,
    nu: f64,
    alpha: f64,
    omega: f64,
    spectrum: Spectrum,
) -> Vec<Complex64> {
    SpectralField::zeros(lmax, FieldKind::Stream)
        .modes()
        .map(|(l, m, _)| {
            Complex64::new(nu * spectrum.eigenvalue(l) + alpha, 0.0)
                + coriolis_multiplier(l, m, omega)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OUState {
    pub t: f64,
    pub z: SpectralField,
    pub alpha: f64,
    pub kappa: Vec<Complex64>,
    /// Global index of the next noise block.
    pub substep: u64,
}

impl OUState {
    pub fn new(
        z0: SpectralField,
        nu: f64,
        alpha: f64,
        omega: f64,
        spectrum: Spectrum,
    ) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        if z0.kind() != FieldKind::Stream {
            return Err(Error::Shape("OU state must be a stream field".into()));
        }
        let kappa = decay_rates(z0.lmax(), nu, alpha, omega, spectrum);
        if let Some(k) = kappa.iter().find(|k| !(k.re > 0.0)) {
            return Err(Error::Domain(format!(
                "OU decay rate has non-positive real part {}; a positive alpha is required",
                k.re
            )));
        }
        Ok(Self {
            t: 0.0,
            z: z0,
            alpha,
            kappa,
            substep: 0,
        })
    }

    pub fn zeros(lmax: usize, nu: f64, alpha: f64, omega: f64, spectrum: Spectrum) -> Result<Self> {
        Self::new(
            SpectralField::zeros(lmax, FieldKind::Stream),
            nu,
            alpha,
            omega,
            spectrum,
        )
    }
}

/// Number of generator blocks in `dt`; errors unless `dt` is a whole multiple.
pub fn substeps_in(dt: f64, gen: &NoiseGenerator) -> Result<u64> {
    let n = (dt / gen.width()).round();
    if !(n >= 1.0) || (n * gen.width() - dt).abs() > 1e-9 * dt {
        return Err(Error::Domain(format!(
            "step {dt} is not a whole multiple of the noise substep {}",
            gen.width()
        )));
    }
    Ok(n as u64)
}

/// Advances `z` by `dt`:
/// `z ← e^{−κΔt} z + Σ_j e^{−κ(Δt − s_j)} G ΔL_j` with left endpoints `s_j`.
pub fn ou_step(
    state: &OUState,
    dt: f64,
    spec: &NoiseSpec,
    gen: &NoiseGenerator,
) -> Result<OUState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if gen.lmax() != state.z.lmax() {
        return Err(Error::Shape(format!(
            "noise lmax {} differs from OU lmax {}",
            gen.lmax(),
            state.z.lmax()
        )));
    }
    let n = substeps_in(dt, gen)?;
    let w = gen.width();
    let decay: Vec<Complex64> = state.kappa.iter().map(|k| (-k * w).exp()).collect();
    let mut z = state.z.clone();
    let noisy = !spec.sigma.is_zero();
    for j in 0..n {
        if noisy {
            let dpsi = apply_covariance(&gen.block(state.substep + j), spec);
            for (c, d) in z.coeffs_mut().iter_mut().zip(dpsi.coeffs()) {
                *c += d;
            }
        }
        for (c, e) in z.coeffs_mut().iter_mut().zip(&decay) {
            *c *= e;
        }
    }
    if !noisy {
        // Exact decay over the whole step, free of per-substep rounding.
        let exact: Vec<Complex64> = state.kappa.iter().map(|k| (-k * dt).exp()).collect();
        for ((c, z0), e) in z.coeffs_mut().iter_mut().zip(state.z.coeffs()).zip(&exact) {
            *c = z0 * e;
        }
    }
    Ok(OUState {
        t: state.t + dt,
        z,
        alpha: state.alpha,
        kappa: state.kappa.clone(),
        substep: state.substep + n,
    })
}

/// Single real coordinate calibration constant:
/// `c̃_p = 2^{p/2} Γ((1+p)/2) Γ(1 − p/β) / (Γ(1 − p/2) √π)`.
///
/// A scalar `∫ e^{−κ(t−s)} σ dL_s` is symmetric stable, so
/// `E|z|^p = c̃_p (σ^β (1 − e^{−βκt}) / (βκ))^{p/β}` exactly.
pub fn c_tilde(beta: f64, p: f64) -> f64 {
    let g = libm::tgamma;
    2f64.powf(p / 2.0) * g((1.0 + p) / 2.0) * g(1.0 - p / beta)
        / (g(1.0 - p / 2.0) * std::f64::consts::PI.sqrt())
}

/// `Γ(1 − p/β) / Γ(1 − p/2)`: constant that bounds every truncation,
/// via Jensen conditional on the subordinator and subadditivity of `x^{β/2}`.
pub fn universal_constant(beta: f64, p: f64) -> f64 {
    libm::tgamma(1.0 - p / beta) / libm::tgamma(1.0 - p / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZlpBound {
    /// `(Σ_{l ≤ lmax} (2l+1)|σ_l|^β (1 − e^{−β(νλ_l+α)t}) / (β(νλ_l+α)))^{p/β}`.
    pub expression: f64,
    /// Inner sum over `lmax < l ≤ 10⁵` (before the power `p/β`).
    pub tail: f64,
    pub c_tilde: f64,
}

const ZLP_FAR: usize = 100_000;

fn zlp_term(spec: &NoiseSpec, nu: f64, alpha: f64, t: f64, l: usize) -> f64 {
    let s = spec.sigma(l).abs();
    if s == 0.0 {
        return 0.0;
    }
    let rate = spec.beta * (nu * laplace_eigenvalue(l) + alpha);
    (2 * l + 1) as f64 * s.powf(spec.beta) * (-(-rate * t).exp_m1()) / rate
}

pub fn zlp_bound(
    t: f64,
    p: f64,
    spec: &NoiseSpec,
    nu: f64,
    alpha: f64,
    lmax: usize,
) -> Result<ZlpBound> {
    check_moment_order(p, spec.beta)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    let inner: f64 = (1..=lmax).map(|l| zlp_term(spec, nu, alpha, t, l)).sum();
    let tail: f64 = if spec.sigma.is_zero() {
        0.0
    } else {
        (lmax + 1..=ZLP_FAR)
            .map(|l| zlp_term(spec, nu, alpha, t, l))
            .sum()
    };
    Ok(ZlpBound {
        expression: inner.powf(p / spec.beta),
        tail,
        c_tilde: c_tilde(spec.beta, p),
    })
}

/// `E|z_t|²_H = Σ (2l+1) σ_l² (1 − e^{−2(νλ_l+α)t}) / (2(νλ_l+α))` for Gaussian noise.
pub fn gaussian_second_moment(spec: &NoiseSpec, nu: f64, alpha: f64, t: f64, lmax: usize) -> f64 {
    (1..=lmax)
        .map(|l| {
            let s = spec.sigma(l);
            let k = nu * laplace_eigenvalue(l) + alpha;
            (2 * l + 1) as f64 * s * s * (-(-2.0 * k * t).exp_m1()) / (2.0 * k)
        })
        .sum()
}

/// Settings for Monte-Carlo runs of `z⁰` (no Coriolis, zero start).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuEnsemble {
    pub lmax: usize,
    pub nu: f64,
    pub alpha: f64,
    pub n_paths: usize,
    /// Noise substep width.
    pub width: f64,
}

impl OuEnsemble {
    fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Domain("n_paths must be positive".into()));
        }
        if self.lmax == 0 {
            return Err(Error::Domain("lmax must be at least 1".into()));
        }
        Ok(())
    }

    /// Endpoint `z⁰(t)` of path number `path`.
    pub fn endpoint(&self, spec: &NoiseSpec, t: f64, path: u64) -> Result<SpectralField> {
        let gen = NoiseGenerator::new(spec, self.lmax, path, self.width)?;
        let n = (t / self.width).round().max(1.0);
        let s0 = OUState::zeros(self.lmax, self.nu, self.alpha, 0.0, Spectrum::Paper)?;
        let dt = n * self.width;
        Ok(ou_step(&s0, dt, spec, &gen)?.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub empirical: f64,
    pub bound: f64,
    pub ratio: f64,
    pub c_tilde: f64,
    pub expression: f64,
}

/// `|z|^p_H` samples of `z⁰(t)` over the ensemble, in path order.
pub fn ou_norm_samples(spec: &NoiseSpec, ens: &OuEnsemble, t: f64, p: f64) -> Result<Vec<f64>> {
    ens.check()?;
    (0..ens.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let z = ens.endpoint(spec, t, path)?;
            Ok(z.weighted_inner(&z, laplace_eigenvalue).powf(p / 2.0))
        })
        .collect()
}

/// Monte-Carlo `E|z⁰_t|^p` against `c̃_p` times the moment expression.
pub fn ou_moment_check(spec: &NoiseSpec, ens: &OuEnsemble, p: f64, t: f64) -> Result<MomentCheck> {
    check_moment_order(p, spec.beta)?;
    let samples = ou_norm_samples(spec, ens, t, p)?;
    let empirical = crate::stats::mean(&samples);
    let zb = zlp_bound(t, p, spec, ens.nu, ens.alpha, ens.lmax)?;
    let bound = zb.c_tilde * zb.expression;
    Ok(MomentCheck {
        empirical,
        bound,
        ratio: if bound > 0.0 { empirical / bound } else { 0.0 },
        c_tilde: zb.c_tilde,
        expression: zb.expression,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupGrowth {
    /// `(T, E sup_{t ≤ T} |A^δ z_t|^p)`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    /// `p(1 − δ) + p/β`.
    pub exponent_bound: f64,
}

/// Growth of `E sup_{t≤T}|A^δ z⁰_t|^p` in `T`, sampled on the substep grid.
pub fn sup_norm_growth(
    spec: &NoiseSpec,
    ens: &OuEnsemble,
    delta: f64,
    p: f64,
    t_list: &[f64],
) -> Result<SupGrowth> {
    ens.check()?;
    check_moment_order(p, spec.beta)?;
    if t_list.is_empty() || t_list.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("T list must be nonempty and positive".into()));
    }
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    let n_total = (t_max / ens.width).round() as u64;
    let checkpoints: Vec<u64> = t_list
        .iter()
        .map(|t| ((t / ens.width).round() as u64).max(1))
        .collect();
    let weight = |l: usize| laplace_eigenvalue(l).powf(1.0 + 2.0 * delta);
    let per_path: Vec<Vec<f64>> = (0..ens.n_paths as u64)
        .into_par_iter()
        .map(|path| -> Result<Vec<f64>> {
            let gen = NoiseGenerator::new(spec, ens.lmax, path, ens.width)?;
            let mut s = OUState::zeros(ens.lmax, ens.nu, ens.alpha, 0.0, Spectrum::Paper)?;
            let mut sup = 0.0f64;
            let mut sups = vec![0.0; checkpoints.len()];
            for k in 1..=n_total {
                s = ou_step(&s, ens.width, spec, &gen)?;
                sup = sup.max(s.z.weighted_inner(&s.z, weight));
                for (i, &c) in checkpoints.iter().enumerate() {
                    if c == k {
                        sups[i] = sup.powf(p / 2.0);
                    }
                }
            }
            Ok(sups)
        })
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = t_list
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let m = per_path.iter().map(|v| v[i]).sum::<f64>() / ens.n_paths as f64;
            (t, m)
        })
        .collect();
    let slope = if points.iter().all(|p| p.1 > 0.0) && points.len() > 1 {
        loglog_slope(&points)
    } else {
        0.0
    };
    Ok(SupGrowth {
        points,
        slope,
        exponent_bound: p * (1.0 - delta) + p / spec.beta,
    })
}
