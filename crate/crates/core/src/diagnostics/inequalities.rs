use std::io::Write;

use rayon::prelude::*;

use super::{da_norm_sq, h_norm_sq, l4_norm, v_norm_sq};
use crate::error::{Error, Result};
use crate::harmonics::SpectralField;
use crate::operators::{
    coriolis_apply, h_inner, stokes_apply, trilinear_b, CoriolisPath, OperatorContext,
};

/// Worst case of one check over all samples.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityEntry {
    pub check: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub input_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub entries: Vec<InequalityEntry>,
}

impl InequalityReport {
    pub fn get(&self, check: &str) -> Option<&InequalityEntry> {
        self.entries.iter().find(|e| e.check == check)
    }
}

pub const CHECKS: [&str; 7] = [
    "poincare",
    "ladyzhenskaya",
    "b1",
    "b2",
    "b5",
    "coriolis_zero",
    "b_antisym",
];

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

struct SampleNorms {
    h: f64,
    v: f64,
    da: f64,
    l4: f64,
}

/// Evaluates each inequality on every sample (triples are formed cyclically
/// from consecutive samples) and keeps the largest ratio per check.
///
/// `coriolis_zero` uses `max(|(Cu,u)|, |(Cu,Au)|)` against `|Cu||u|_V`;
/// `b_antisym` uses `|b(u,v,w) + b(u,w,v)|` against `|b(u,v,w)| + |b(u,w,v)|`
/// together with `|b(u,w,w)|`.
pub fn inequality_report(
    samples: &[SpectralField],
    ctx: &OperatorContext,
) -> Result<InequalityReport> {
    if samples.is_empty() {
        return Err(Error::Domain(
            "inequality report needs at least one sample".into(),
        ));
    }
    let spectrum = ctx.spectrum;
    let n = samples.len();
    let norms: Vec<SampleNorms> = samples
        .par_iter()
        .map(|u| {
            Ok(SampleNorms {
                h: h_norm_sq(u).sqrt(),
                v: v_norm_sq(u, spectrum).sqrt(),
                da: da_norm_sq(u, spectrum).sqrt(),
                l4: l4_norm(u, ctx)?,
            })
        })
        .collect::<Result<_>>()?;

    let per_sample: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (j, k) = ((i + 1) % n, (i + 2) % n);
            let (u, v, w) = (&samples[i], &samples[j], &samples[k]);
            let (nu_, nv, nw) = (&norms[i], &norms[j], &norms[k]);
            let buvw = trilinear_b(u, v, w, ctx)?;
            let buwv = trilinear_b(u, w, v, ctx)?;
            let buww = trilinear_b(u, w, w, ctx)?;
            let cu = coriolis_apply(u, ctx, CoriolisPath::Grid)?;
            let au = stokes_apply(u, 1.0, spectrum)?;
            let cu_u = h_inner(&cu, u).abs();
            let cu_au = h_inner(&cu, &au).abs();
            let cu_norm = h_norm_sq(&cu).sqrt();
            Ok(vec![
                (2.0 * nu_.h * nu_.h, nu_.v * nu_.v),
                (nu_.l4, (nu_.h * nu_.v).sqrt()),
                (buvw.abs(), (nu_.h * nu_.v * nv.h * nv.v).sqrt() * nw.v),
                (buvw.abs(), (nu_.h * nu_.v * nv.v * nv.da).sqrt() * nw.h),
                (buvw.abs(), nu_.l4 * nv.v * nw.l4),
                (cu_u.max(cu_au), cu_norm * nu_.v.max(nu_.da)),
                (
                    (buvw + buwv).abs().max(buww.abs()),
                    buvw.abs() + buwv.abs() + nu_.v * nw.v * nw.v,
                ),
            ])
        })
        .collect::<Result<_>>()?;

    let entries = CHECKS
        .iter()
        .enumerate()
        .map(|(c, &check)| {
            let mut best = InequalityEntry {
                check,
                lhs: 0.0,
                rhs: 0.0,
                ratio: f64::NEG_INFINITY,
                input_id: 0,
            };
            for (id, vals) in per_sample.iter().enumerate() {
                let (lhs, rhs) = vals[c];
                let r = ratio(lhs, rhs);
                if r > best.ratio {
                    best = InequalityEntry {
                        check,
                        lhs,
                        rhs,
                        ratio: r,
                        input_id: id,
                    };
                }
            }
            best
        })
        .collect();
    Ok(InequalityReport { entries })
}

/// Writes `check,lhs,rhs,ratio,input_id` rows.
pub fn write_inequality_csv<W: Write>(report: &InequalityReport, mut out: W) -> Result<()> {
    writeln!(out, "check,lhs,rhs,ratio,input_id")?;
    for e in &report.entries {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{}",
            e.check, e.lhs, e.rhs, e.ratio, e.input_id
        )?;
    }
    Ok(())
}
