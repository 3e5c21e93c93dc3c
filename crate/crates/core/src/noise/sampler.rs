use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, Open01};

use crate::error::{Error, Result};

/// Draws `ΔX ≥ 0` with `E e^{−rΔX} = e^{−scale_t · r^{index}}`.
///
/// Kanter's representation of the totally skewed positive stable law
/// (one uniform, one exponential):
/// `S = sin(aU) / sin(U)^{1/a} · (sin((1−a)U) / W)^{(1−a)/a}` has
/// `E e^{−rS} = e^{−r^a}`, and `ΔX = scale_t^{1/a} S`.
pub fn sample_positive_stable<R: Rng + ?Sized>(
    index: f64,
    scale_t: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(index > 0.0 && index <= 1.0) {
        return Err(Error::Domain(format!(
            "subordinator index must lie in (0, 1], got {index}"
        )));
    }
    if !(scale_t >= 0.0) || !scale_t.is_finite() {
        return Err(Error::Domain(format!(
            "subordinator time must be finite and >= 0, got {scale_t}"
        )));
    }
    if index == 1.0 || scale_t == 0.0 {
        return Ok(scale_t);
    }
    let a = index;
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    let s =
        (a * u).sin() / u.sin().powf(1.0 / a) * ((((1.0 - a) * u).sin() / w).powf((1.0 - a) / a));
    Ok(scale_t.powf(1.0 / a) * s)
}
