use super::{NoiseSpec, SigmaRule};
use crate::harmonics::laplace_eigenvalue;

/// Default partial-sum cutoff.
pub const DEFAULT_L_STAR: usize = 1_000_000;

const REL_TOL: f64 = 1e-2;

/// Result of the summability check for `Σ_l |σ_l|^β λ_l^{βδ}`.
///
/// `value` is the degree-indexed sum; the `weighted_*` fields repeat the
/// check with each degree counted `2l + 1` times, once per basis element.
#[derive(Debug, Clone, PartialEq)]
pub struct Summability {
    pub value: f64,
    pub tail_bound: f64,
    pub converged: bool,
    /// Exponent `e` with terms `~ l^e` when the series diverges.
    pub growth_rate: Option<f64>,
    pub weighted_value: f64,
    pub weighted_tail_bound: f64,
    pub weighted_converged: bool,
    pub weighted_growth_rate: Option<f64>,
}

fn term(spec: &NoiseSpec, delta: f64, l: usize) -> f64 {
    let s = spec.sigma(l).abs();
    if s == 0.0 {
        return 0.0;
    }
    s.powf(spec.beta) * laplace_eigenvalue(l).powf(spec.beta * delta)
}

/// Partial sum to `l_star` plus an integral-test bound on the remainder.
pub fn check_summability(spec: &NoiseSpec, delta: f64, l_star: usize) -> Summability {
    let beta = spec.beta;
    let (mut value, mut weighted) = (0.0, 0.0);
    for l in 1..=l_star {
        let t = term(spec, delta, l);
        value += t;
        weighted += (2 * l + 1) as f64 * t;
    }
    let big_l = l_star as f64;
    let (tail, wtail, rate, wrate) = match &spec.sigma {
        SigmaRule::Band { .. } | SigmaRule::Table(_) => {
            // Finitely supported rules are exact once l_star covers the support.
            let support = match &spec.sigma {
                SigmaRule::Band { lmax, .. } => *lmax,
                SigmaRule::Table(v) => v.len(),
                _ => unreachable!(),
            };
            let rest = if support > l_star { f64::INFINITY } else { 0.0 };
            (rest, rest, None, None)
        }
        SigmaRule::Const { value: c } if *c == 0.0 => (0.0, 0.0, None, None),
        SigmaRule::Const { .. } => (
            f64::INFINITY,
            f64::INFINITY,
            Some(2.0 * beta * delta),
            Some(2.0 * beta * delta + 1.0),
        ),
        SigmaRule::Power { gamma } => {
            // term = l^e (1 + 1/l)^{βδ}, e = 2βδ − γβ
            let e = 2.0 * beta * delta - gamma * beta;
            let corr = (1.0 + 1.0 / big_l).powf(beta * delta);
            let tail = if e < -1.0 {
                corr * big_l.powf(e + 1.0) / (-e - 1.0)
            } else {
                f64::INFINITY
            };
            let wtail = if e < -2.0 {
                2.0 * (1.0 + 0.5 / big_l) * corr * big_l.powf(e + 2.0) / (-e - 2.0)
            } else {
                f64::INFINITY
            };
            let rate = (e >= -1.0).then_some(e);
            let wrate = (e >= -2.0).then_some(e + 1.0);
            (tail, wtail, rate, wrate)
        }
    };
    let ok = |tail: f64, v: f64| tail.is_finite() && tail <= REL_TOL * v.max(f64::MIN_POSITIVE);
    Summability {
        value,
        tail_bound: tail,
        converged: ok(tail, value) || (value == 0.0 && tail == 0.0),
        growth_rate: rate,
        weighted_value: weighted,
        weighted_tail_bound: wtail,
        weighted_converged: ok(wtail, weighted) || (weighted == 0.0 && wtail == 0.0),
        weighted_growth_rate: wrate,
    }
}
