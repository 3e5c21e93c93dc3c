//! Norms, energy ledgers, inequality monitors and a-priori bound reports.

mod gronwall;
mod inequalities;
mod ledger;

pub use gronwall::{empirical_b_constant, gronwall_bound_report, GronwallReport, EPS_K12, EPS_K34};
pub use inequalities::{
    inequality_report, write_inequality_csv, InequalityEntry, InequalityReport,
};
pub use ledger::{energy_residual, EnergyLedger, LedgerSample};

use crate::error::Result;
use crate::harmonics::{laplace_eigenvalue, SpectralField};
use crate::operators::{OperatorContext, Spectrum};

/// `|u|²_H = Σ l(l+1)|ψ|²` (m > 0 counted twice).
pub fn h_norm_sq(u: &SpectralField) -> f64 {
    u.weighted_inner(u, laplace_eigenvalue)
}

/// `|u|²_V = (Au, u)_H`.
pub fn v_norm_sq(u: &SpectralField, spectrum: Spectrum) -> f64 {
    u.weighted_inner(u, |l| laplace_eigenvalue(l) * spectrum.eigenvalue(l))
}

/// `|Au|²_H`.
pub fn da_norm_sq(u: &SpectralField, spectrum: Spectrum) -> f64 {
    u.weighted_inner(u, |l| {
        laplace_eigenvalue(l) * spectrum.eigenvalue(l).powi(2)
    })
}

/// `|u|_{L⁴}` by grid quadrature of `|u|⁴`.
pub fn l4_norm(u: &SpectralField, ctx: &OperatorContext) -> Result<f64> {
    let t = ctx.transform();
    let g = t.vector_synthesis(u)?;
    let q: Vec<f64> = g
        .theta
        .iter()
        .zip(&g.phi)
        .map(|(a, b)| {
            let s = a * a + b * b;
            s * s
        })
        .collect();
    Ok(t.grid().integrate(&q).max(0.0).powf(0.25))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub h: f64,
    pub v: f64,
    pub da: f64,
    pub l4: f64,
}

pub fn norms(u: &SpectralField, ctx: &OperatorContext) -> Result<Norms> {
    ctx.check_field(u)?;
    Ok(Norms {
        h: h_norm_sq(u).sqrt(),
        v: v_norm_sq(u, ctx.spectrum).sqrt(),
        da: da_norm_sq(u, ctx.spectrum).sqrt(),
        l4: l4_norm(u, ctx)?,
    })
}
