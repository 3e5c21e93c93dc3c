use std::f64::consts::PI;

use crate::error::{Error, Result};

const MAX_NEWTON_ITERATIONS: usize = 100;

/// Gauss-Legendre rings in colatitude times a uniform longitude circle.
///
/// Rings are ordered north to south (`μ = cos θ` decreasing); no node sits on
/// a pole.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub n_lat: usize,
    pub n_lon: usize,
    /// `μ = cos θ` per ring.
    pub mu: Vec<f64>,
    /// Gauss-Legendre weight per ring.
    pub weights: Vec<f64>,
    pub theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub longitudes: Vec<f64>,
}

impl QuadratureGrid {
    /// Area element attached to every node of ring `i`: `w_i · 2π / n_lon`.
    #[inline]
    pub fn area_weight(&self, ring: usize) -> f64 {
        self.weights[ring] * 2.0 * PI / self.n_lon as f64
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_lat * self.n_lon
    }

    /// Smallest grid that makes quadratic products exact after truncation back
    /// to `lmax` (the 2/3 rule).
    pub fn dealiased(lmax: usize) -> Result<Self> {
        let (n_lat, n_lon) = dealiased_size(lmax);
        gauss_legendre_grid(n_lat, n_lon)
    }

    /// Quadrature of a ring-major scalar array.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points());
        let mut total = 0.0;
        for (ring, row) in values.chunks_exact(self.n_lon).enumerate() {
            let ring_sum: f64 = row.iter().sum();
            total += self.area_weight(ring) * ring_sum;
        }
        total
    }

    pub fn satisfies_dealiasing(&self, lmax: usize) -> bool {
        let (n_lat, n_lon) = dealiased_size(lmax);
        self.n_lat >= n_lat && self.n_lon >= n_lon
    }
}

/// `(n_lat, n_lon)` with `2·n_lat ≥ 3·lmax + 1` and `n_lon ≥ 3·lmax + 1`.
pub fn dealiased_size(lmax: usize) -> (usize, usize) {
    ((3 * lmax + 2) / 2, 3 * lmax + 1)
}

/// Legendre `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_legendre_grid(n_lat: usize, n_lon: usize) -> Result<QuadratureGrid> {
    if n_lat == 0 || n_lon == 0 {
        return Err(Error::Domain(format!(
            "grid needs n_lat >= 1 and n_lon >= 1, got {n_lat} x {n_lon}"
        )));
    }
    let nf = n_lat as f64;
    let mut mu = vec![0.0; n_lat];
    let mut weights = vec![0.0; n_lat];
    // Roots are symmetric; solve the northern half and mirror.
    let half = n_lat.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        let mut dp = 0.0;
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let (p, d) = legendre_with_derivative(n_lat, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n_lat, x);
                dp = d;
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureConvergence {
                n: n_lat,
                index: i,
                iterations: MAX_NEWTON_ITERATIONS,
            });
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        mu[i] = x;
        weights[i] = w;
        mu[n_lat - 1 - i] = -x;
        weights[n_lat - 1 - i] = w;
    }
    if n_lat % 2 == 1 {
        mu[n_lat / 2] = 0.0;
    }
    let theta: Vec<f64> = mu.iter().map(|m| m.acos()).collect();
    let sin_theta: Vec<f64> = mu.iter().map(|m| (1.0 - m * m).sqrt()).collect();
    let longitudes = (0..n_lon)
        .map(|j| 2.0 * PI * j as f64 / n_lon as f64)
        .collect();
    Ok(QuadratureGrid {
        n_lat,
        n_lon,
        mu,
        weights,
        theta,
        sin_theta,
        longitudes,
    })
}
