use rayon::prelude::*;

use super::{da_norm_sq, h_norm_sq, v_norm_sq, EnergyLedger};
use crate::error::Result;
use crate::harmonics::SpectralField;
use crate::operators::{stokes_apply, trilinear_b, OperatorContext};

/// Young splitting parameter for `K₁`, `K₂`, as a multiple of `ν`.
pub const EPS_K12: f64 = 1.0;
/// Young splitting parameter for `K₃`, `K₄`, as a multiple of `ν`
/// (the `|Av|²` balance needs `ε < 4ν/13`).
pub const EPS_K34: f64 = 0.25;

const SLACK: f64 = 1e-9;

/// A-priori bounds evaluated from a run and compared with the running
/// quantities they control.
#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    pub eps_k12: f64,
    pub eps_k34: f64,
    /// Measured constant in `|b(u,v,w)| ≤ c|u|^{1/2}|u|_V^{1/2}|v|_V^{1/2}|Av|^{1/2}|w|`.
    pub c_b: f64,
    /// `C(ε) = 27 c_b⁴ / (256 ε³)`.
    pub c_eps: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub int_v2: f64,
    pub sup_v_h2: f64,
    pub sup_v_v2: f64,
    pub int_av2: f64,
    pub k1_ok: bool,
    pub k2_ok: bool,
    pub k3_ok: bool,
    pub k4_ok: bool,
}

impl GronwallReport {
    pub fn all_ok(&self) -> bool {
        self.k1_ok && self.k2_ok && self.k3_ok && self.k4_ok
    }
}

fn below(x: f64, bound: f64) -> bool {
    x <= bound * (1.0 + SLACK) + f64::MIN_POSITIVE
}

/// Evaluates `K₁ … K₄` from the ledger of a completed run.
///
/// `K₁ = (|v₀|² + (2/ε)∫|v|²|z|²_V + (2/ε)∫|F|² + (ε/2)∫|v|²) / (2ν − ε/2)`
/// bounds `∫|v|²_V`, and `K₂ = (2ν − ε/2) K₁` bounds `sup|v|²`.
/// `K₃ = (|v₀|²_V + (2/ε)∫|F|²) exp(2C(ε) Θ)` bounds `sup|v|²_V`, with
/// `Θ = K₂K₁ + ∫|v|²|z|²_V + sup|z|² ∫|z|²_V`, and
/// `K₄ = (|v₀|²_V + 2C(ε) K₃ Θ + (2/ε)∫|F|²) / (2ν − 13ε/2)` bounds `∫|Av|²`.
pub fn gronwall_bound_report(ledger: &EnergyLedger, nu: f64, c_b: f64) -> GronwallReport {
    let e1 = EPS_K12 * nu;
    let d1 = 2.0 * nu - 0.5 * e1;
    let k1 = (ledger.v0_h2
        + (2.0 / e1) * ledger.int_vh2_zv2
        + (2.0 / e1) * ledger.int_f2
        + 0.5 * e1 * ledger.int_vh2)
        / d1;
    let k2 = d1 * k1;

    let e3 = EPS_K34 * nu;
    let c_eps = 27.0 * c_b.powi(4) / (256.0 * e3.powi(3));
    let theta = k2 * k1 + ledger.int_vh2_zv2 + ledger.sup_z_h2 * ledger.int_zv2;
    let forcing = (2.0 / e3) * ledger.int_f2;
    let k3 = (ledger.v0_v2 + forcing) * (2.0 * c_eps * theta).exp();
    let k4 = (ledger.v0_v2 + 2.0 * c_eps * k3 * theta + forcing) / (2.0 * nu - 6.5 * e3);

    GronwallReport {
        eps_k12: e1,
        eps_k34: e3,
        c_b,
        c_eps,
        k1,
        k2,
        k3,
        k4,
        int_v2: ledger.int_v2,
        sup_v_h2: ledger.sup_v_h2,
        sup_v_v2: ledger.sup_v_v2,
        int_av2: ledger.int_av2,
        k1_ok: below(ledger.int_v2, k1),
        k2_ok: below(ledger.sup_v_h2, k2),
        k3_ok: below(ledger.sup_v_v2, k3),
        k4_ok: below(ledger.int_av2, k4),
    }
}

/// Largest observed `|b(u,v,w)| / (|u|^{1/2}|u|_V^{1/2}|v|_V^{1/2}|Av|^{1/2}|w|)`
/// over pairs of consecutive samples, with `w = Av` and `w = Au`.
pub fn empirical_b_constant(samples: &[SpectralField], ctx: &OperatorContext) -> Result<f64> {
    let n = samples.len();
    let spectrum = ctx.spectrum;
    let ratios: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = &samples[i];
            let v = &samples[(i + 1) % n];
            let (uh, uv) = (h_norm_sq(u).sqrt(), v_norm_sq(u, spectrum).sqrt());
            let mut best = 0.0f64;
            for (second, third) in [(v, v), (u, u), (v, u)] {
                let w = stokes_apply(third, 1.0, spectrum)?;
                let b = trilinear_b(u, second, &w, ctx)?.abs();
                let rhs = (uh
                    * uv
                    * v_norm_sq(second, spectrum).sqrt()
                    * da_norm_sq(second, spectrum).sqrt())
                .sqrt()
                    * h_norm_sq(&w).sqrt();
                if rhs > 0.0 {
                    best = best.max(b / rhs);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}
