//! Grid <-> spectral transforms on a Gauss-Legendre grid.
//!
//! Longitude is handled by a DFT per ring, latitude by Gauss quadrature
//! against tabulated `P̃_l^m` and `dP̃_l^m/dθ`. Every ring is processed
//! independently and ring contributions are always summed north to south.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{FieldKind, ScalarGridField, SpectralField, TangentGridField};
use super::grid::QuadratureGrid;
use super::legendre::{tri_index, tri_len, LegendreTable};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which latitudinal kernel multiplies the coefficients during synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kernel {
    Value,
    ThetaDerivative,
}

pub struct SphericalTransform {
    lmax: usize,
    grid: QuadratureGrid,
    tables: Vec<LegendreTable>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SphericalTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphericalTransform")
            .field("lmax", &self.lmax)
            .field("n_lat", &self.grid.n_lat)
            .field("n_lon", &self.grid.n_lon)
            .finish()
    }
}

impl SphericalTransform {
    /// Requires `n_lat >= lmax + 1` and `n_lon >= 2·lmax + 1` so that
    /// band-limited fields round-trip exactly.
    pub fn new(lmax: usize, grid: QuadratureGrid) -> Result<Self> {
        if grid.n_lat < lmax + 1 {
            return Err(Error::Resolution {
                lmax,
                reason: format!("n_lat = {} < lmax + 1 = {}", grid.n_lat, lmax + 1),
            });
        }
        if grid.n_lon < 2 * lmax + 1 {
            return Err(Error::Resolution {
                lmax,
                reason: format!("n_lon = {} < 2·lmax + 1 = {}", grid.n_lon, 2 * lmax + 1),
            });
        }
        let tables = grid
            .mu
            .iter()
            .zip(&grid.sin_theta)
            .map(|(&mu, &s)| LegendreTable::new(lmax, mu, s))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n_lon);
        let inverse = planner.plan_fft_inverse(grid.n_lon);
        Ok(Self {
            lmax,
            grid,
            tables,
            forward,
            inverse,
        })
    }

    /// Transform on the smallest grid that dealiases quadratic products.
    pub fn dealiased(lmax: usize) -> Result<Self> {
        Self::new(lmax, QuadratureGrid::dealiased(lmax)?)
    }

    #[inline]
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    #[inline]
    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    fn check_lmax(&self, f: &SpectralField) -> Result<()> {
        if f.lmax() > self.lmax {
            return Err(Error::Resolution {
                lmax: f.lmax(),
                reason: format!("transform built for lmax {}", self.lmax),
            });
        }
        Ok(())
    }

    /// Synthesizes `Σ c_{l,m} K_{l,m}(θ) (im)^{phi_order} e^{imφ} / sin^{p}θ` on
    /// every node, where `K` is `P̃` or `dP̃/dθ`.
    fn synthesize(
        &self,
        full: &[Complex64],
        lmax: usize,
        kernel: Kernel,
        phi_order: u32,
        inv_sin_power: i32,
    ) -> Vec<f64> {
        let n_lon = self.grid.n_lon;
        let mut out = vec![0.0; self.grid.n_points()];
        let mut buffer = vec![ZERO; n_lon];
        let mut scratch = vec![ZERO; self.inverse.get_inplace_scratch_len()];
        for (ring, table) in self.tables.iter().enumerate() {
            buffer.iter_mut().for_each(|b| *b = ZERO);
            let kvals = match kernel {
                Kernel::Value => &table.values,
                Kernel::ThetaDerivative => &table.dtheta,
            };
            let sin_factor = self.grid.sin_theta[ring].powi(-inv_sin_power);
            for m in 0..=lmax {
                let mut acc = ZERO;
                for l in m..=lmax {
                    let idx = tri_index(l, m);
                    acc += full[idx] * kvals[idx];
                }
                if phi_order > 0 {
                    acc *= Complex64::new(0.0, m as f64).powu(phi_order);
                }
                if inv_sin_power != 0 {
                    acc *= sin_factor;
                }
                if m == 0 {
                    buffer[0] += acc;
                } else {
                    buffer[m] += acc;
                    buffer[n_lon - m] += acc.conj();
                }
            }
            self.inverse.process_with_scratch(&mut buffer, &mut scratch);
            let row = &mut out[ring * n_lon..(ring + 1) * n_lon];
            for (o, b) in row.iter_mut().zip(&buffer) {
                *o = b.re;
            }
        }
        out
    }

    /// Per-ring longitude integrals `∫ f e^{−imφ} dφ` for `m = 0..=lmax`.
    fn ring_fourier(&self, values: &[f64]) -> Vec<Vec<Complex64>> {
        let n_lon = self.grid.n_lon;
        let scale = 2.0 * PI / n_lon as f64;
        let mut buffer = vec![ZERO; n_lon];
        let mut scratch = vec![ZERO; self.forward.get_inplace_scratch_len()];
        values
            .chunks_exact(n_lon)
            .map(|row| {
                for (b, &v) in buffer.iter_mut().zip(row) {
                    *b = Complex64::new(v, 0.0);
                }
                self.forward.process_with_scratch(&mut buffer, &mut scratch);
                buffer[..=self.lmax].iter().map(|c| c * scale).collect()
            })
            .collect()
    }

    /// Scalar analysis `f_{l,m} = ∫ f conj(Y_{l,m}) dS` by quadrature.
    #[allow(clippy::needless_range_loop)]
    pub fn scalar_analysis(&self, f: &ScalarGridField) -> Result<SpectralField> {
        f.check_shape(&self.grid)?;
        let fourier = self.ring_fourier(&f.values);
        let mut full = vec![ZERO; tri_len(self.lmax)];
        for m in 0..=self.lmax {
            for l in m..=self.lmax {
                let idx = tri_index(l, m);
                let mut acc = ZERO;
                for (ring, table) in self.tables.iter().enumerate() {
                    acc += fourier[ring][m] * (self.grid.weights[ring] * table.values[idx]);
                }
                full[idx] = acc;
            }
        }
        Ok(SpectralField::from_full_triangle(
            self.lmax,
            FieldKind::Scalar,
            &full,
        ))
    }

    /// Grid values of `Σ f_{l,m} Y_{l,m}` (any field kind, as a scalar).
    pub fn scalar_synthesis(&self, f: &SpectralField) -> Result<ScalarGridField> {
        self.check_lmax(f)?;
        let values = self.synthesize(&f.to_full_triangle(), f.lmax(), Kernel::Value, 0, 0);
        Ok(ScalarGridField {
            n_lat: self.grid.n_lat,
            n_lon: self.grid.n_lon,
            values,
        })
    }

    /// Grid values of `∂_θ^{a} ∂_φ^{b} f / sin^{p}θ` with `a ∈ {0, 1}`.
    pub fn synthesize_partial(
        &self,
        f: &SpectralField,
        theta_derivative: bool,
        phi_order: u32,
        inv_sin_power: i32,
    ) -> Result<Vec<f64>> {
        self.check_lmax(f)?;
        let kernel = if theta_derivative {
            Kernel::ThetaDerivative
        } else {
            Kernel::Value
        };
        Ok(self.synthesize(
            &f.to_full_triangle(),
            f.lmax(),
            kernel,
            phi_order,
            inv_sin_power,
        ))
    }

    /// Frame components of `∇f = (∂_θ f, (1/sinθ) ∂_φ f)`.
    pub fn gradient_synthesis(&self, f: &SpectralField) -> Result<TangentGridField> {
        self.check_lmax(f)?;
        let full = f.to_full_triangle();
        let lmax = f.lmax();
        Ok(TangentGridField {
            n_lat: self.grid.n_lat,
            n_lon: self.grid.n_lon,
            theta: self.synthesize(&full, lmax, Kernel::ThetaDerivative, 0, 0),
            phi: self.synthesize(&full, lmax, Kernel::Value, 1, 1),
        })
    }

    /// `u = Curl ψ = −x̂ × ∇ψ`, i.e. `u_θ = (1/sinθ) ∂_φ ψ`, `u_φ = −∂_θ ψ`.
    pub fn vector_synthesis(&self, psi: &SpectralField) -> Result<TangentGridField> {
        let grad = self.gradient_synthesis(psi)?;
        Ok(TangentGridField {
            n_lat: grad.n_lat,
            n_lon: grad.n_lon,
            theta: grad.phi,
            phi: grad.theta.into_iter().map(|v| -v).collect(),
        })
    }

    /// `(curl w)_{l,m} = ∫ w · conj(Curl Y_{l,m}) dS`; the `l = 0` slot is zero.
    pub fn curl_analysis(&self, w: &TangentGridField) -> Result<SpectralField> {
        w.check_shape(&self.grid)?;
        let ft = self.ring_fourier(&w.theta);
        let fp = self.ring_fourier(&w.phi);
        let mut full = vec![ZERO; tri_len(self.lmax)];
        for m in 0..=self.lmax {
            let im = Complex64::new(0.0, m as f64);
            for l in m.max(1)..=self.lmax {
                let idx = tri_index(l, m);
                let mut acc = ZERO;
                for (ring, table) in self.tables.iter().enumerate() {
                    let wgt = self.grid.weights[ring];
                    let s = self.grid.sin_theta[ring];
                    // conj(Curl Y) = (−im P̃/sinθ, −dP̃) e^{−imφ}
                    let term = -(im * (table.values[idx] / s)) * ft[ring][m]
                        - fp[ring][m] * table.dtheta[idx];
                    acc += term * wgt;
                }
                full[idx] = acc;
            }
        }
        Ok(SpectralField::from_full_triangle(
            self.lmax,
            FieldKind::Scalar,
            &full,
        ))
    }

    /// `(div w)_{l,m} = −∫ w · conj(∇Y_{l,m}) dS`.
    pub fn divergence_analysis(&self, w: &TangentGridField) -> Result<SpectralField> {
        w.check_shape(&self.grid)?;
        let ft = self.ring_fourier(&w.theta);
        let fp = self.ring_fourier(&w.phi);
        let mut full = vec![ZERO; tri_len(self.lmax)];
        for m in 0..=self.lmax {
            let im = Complex64::new(0.0, m as f64);
            for l in m..=self.lmax {
                let idx = tri_index(l, m);
                let mut acc = ZERO;
                for (ring, table) in self.tables.iter().enumerate() {
                    let wgt = self.grid.weights[ring];
                    let s = self.grid.sin_theta[ring];
                    // conj(∇Y) = (dP̃, −im P̃/sinθ) e^{−imφ}
                    let term = ft[ring][m] * table.dtheta[idx]
                        - (im * (table.values[idx] / s)) * fp[ring][m];
                    acc -= term * wgt;
                }
                full[idx] = acc;
            }
        }
        Ok(SpectralField::from_full_triangle(
            self.lmax,
            FieldKind::Scalar,
            &full,
        ))
    }

    /// Leray projection to a stream function: `ψ_{l,m} = (curl w)_{l,m} / λ_l`
    /// with `λ_l = l(l+1)`. Gradient components are annihilated.
    pub fn vector_analysis(&self, w: &TangentGridField) -> Result<SpectralField> {
        let curl = self.curl_analysis(w)?;
        let psi = curl
            .with_kind(FieldKind::Stream)
            .map_modes(|l, _| Complex64::new(1.0 / (l * (l + 1)) as f64, 0.0));
        Ok(psi)
    }
}
