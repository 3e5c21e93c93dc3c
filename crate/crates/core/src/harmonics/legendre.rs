//! Orthonormalized associated Legendre functions.
//!
//! `P̃_l^m(cos θ)` carries the Condon-Shortley phase and the normalization
//! that makes `Y_{l,m} = P̃_l^m(cos θ) e^{imφ}` orthonormal on the unit sphere.
//! Values are generated by the l-increasing three-term recurrence, which stays
//! finite far beyond the point where the factorial form overflows.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Triangular index of `(l, m)` with `0 <= m <= l`, l-major.
#[inline]
pub fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Number of `(l, m)` pairs with `l <= lmax`, `0 <= m <= l`.
#[inline]
pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Normalized `P̃_l^m` and `dP̃_l^m/dθ` at one colatitude.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub lmax: usize,
    pub values: Vec<f64>,
    pub dtheta: Vec<f64>,
}

impl LegendreTable {
    /// Builds the table at `mu = cos θ`, `sin_theta = sin θ >= 0`.
    pub fn new(lmax: usize, mu: f64, sin_theta: f64) -> Self {
        let n = tri_len(lmax);
        let mut p = vec![0.0; n];
        let mut dp = vec![0.0; n];

        // Sectoral seeds P̃_m^m.
        let mut pmm = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=lmax {
            if m > 0 {
                let mf = m as f64;
                pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta;
            }
            p[tri_index(m, m)] = pmm;
            if m < lmax {
                p[tri_index(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * mu * pmm;
            }
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                p[tri_index(l, m)] = a * (mu * p[tri_index(l - 1, m)] - b * p[tri_index(l - 2, m)]);
            }
        }

        // sinθ dP̃_l^m/dθ = l μ P̃_l^m − sqrt((2l+1)/(2l−1) (l²−m²)) P̃_{l−1}^m
        for l in 0..=lmax {
            for m in 0..=l {
                let lf = l as f64;
                let mf = m as f64;
                let lower = if l > m {
                    ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt()
                        * p[tri_index(l - 1, m)]
                } else {
                    0.0
                };
                dp[tri_index(l, m)] = (lf * mu * p[tri_index(l, m)] - lower) / sin_theta;
            }
        }

        Self {
            lmax,
            values: p,
            dtheta: dp,
        }
    }

    #[inline]
    pub fn p(&self, l: usize, m: usize) -> f64 {
        self.values[tri_index(l, m)]
    }

    #[inline]
    pub fn dp(&self, l: usize, m: usize) -> f64 {
        self.dtheta[tri_index(l, m)]
    }
}

/// Orthonormal spherical harmonic `Y_{l,m}(θ, φ)`, negative `m` via
/// `Y_{l,−m} = (−1)^m conj(Y_{l,m})`.
pub fn eval_ylm(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(Error::Domain(format!("|m| = {am} exceeds l = {l}")));
    }
    let table = LegendreTable::new(l, theta.cos(), theta.sin());
    let y = Complex64::from_polar(table.p(l, am), am as f64 * phi);
    if m < 0 {
        let sign = if am.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(y.conj() * sign)
    } else {
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y00_is_constant() {
        for &(t, p) in &[(0.1, 0.0), (1.3, 2.0), (3.0, 5.5)] {
            let y = eval_ylm(0, 0, t, p).unwrap();
            assert!((y.re - 0.282_094_791_773_878_1).abs() < 1e-15);
            assert_eq!(y.im, 0.0);
        }
    }

    #[test]
    fn y10_at_north_pole() {
        let y = eval_ylm(1, 0, 0.0, 0.0).unwrap();
        assert!((y.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((y.re - 0.488_602_5).abs() < 1e-7);
    }

    #[test]
    fn m_exceeding_l_is_rejected() {
        assert!(matches!(eval_ylm(2, 3, 0.5, 0.5), Err(Error::Domain(_))));
        assert!(matches!(eval_ylm(2, -3, 0.5, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_forms_low_degree() {
        // Condon-Shortley: Y_11 = -sqrt(3/8π) sinθ e^{iφ}, Y_21 = -sqrt(15/8π) sinθ cosθ e^{iφ}
        let (t, ph) = (0.7_f64, 1.1_f64);
        let y11 = eval_ylm(1, 1, t, ph).unwrap();
        let e11 = Complex64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * t.sin(), ph);
        assert!((y11 - e11).norm() < 1e-14);
        let y21 = eval_ylm(2, 1, t, ph).unwrap();
        let e21 = Complex64::from_polar(-(15.0 / (8.0 * PI)).sqrt() * t.sin() * t.cos(), ph);
        assert!((y21 - e21).norm() < 1e-14);
        let y2m1 = eval_ylm(2, -1, t, ph).unwrap();
        assert!((y2m1 + y21.conj()).norm() < 1e-14);
    }

    #[test]
    fn theta_derivative_matches_finite_differences() {
        let lmax = 20;
        let h = 1e-6;
        for &theta in &[0.3_f64, 1.0, 2.2] {
            let t0 = LegendreTable::new(lmax, theta.cos(), theta.sin());
            let tp = LegendreTable::new(lmax, (theta + h).cos(), (theta + h).sin());
            let tm = LegendreTable::new(lmax, (theta - h).cos(), (theta - h).sin());
            for l in 0..=lmax {
                for m in 0..=l {
                    let fd = (tp.p(l, m) - tm.p(l, m)) / (2.0 * h);
                    assert!(
                        (fd - t0.dp(l, m)).abs() < 1e-6 * (1.0 + fd.abs()),
                        "l={l} m={m} fd={fd} an={}",
                        t0.dp(l, m)
                    );
                }
            }
        }
    }

    #[test]
    fn high_degree_stays_finite() {
        let t = LegendreTable::new(180, 0.3, (1.0_f64 - 0.09).sqrt());
        assert!(t
            .values
            .iter()
            .chain(t.dtheta.iter())
            .all(|v| v.is_finite()));
    }
}
