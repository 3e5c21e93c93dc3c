//! Stokes, Coriolis, Ricci and convective operators on divergence-free fields.
//!
//! Linear operators are diagonal on stream-function coefficients; the
//! convective term is evaluated pseudo-spectrally on a dealiasing grid.

mod coriolis;
mod nonlinear;
mod ricci;

use num_complex::Complex64;

pub use coriolis::{coriolis_apply, coriolis_multiplier, CoriolisPath};
pub use nonlinear::{nonlinear_b, nonlinear_b_grid_product, trilinear_b};
pub use ricci::{neg_stress_apply, ricci_apply};

use crate::error::{Error, Result};
use crate::harmonics::{
    laplace_eigenvalue, FieldKind, QuadratureGrid, SpectralField, SphericalTransform,
};

/// Eigenvalue convention for the Stokes operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spectrum {
    /// `λ_l = l(l+1)`.
    #[default]
    Paper,
    /// `λ_l = l(l+1) − 2`, the spectrum of `−P(Δ + 2 Ric)` on `Curl Y_{l,m}`;
    /// vanishes on `l = 1`.
    RicciShifted,
}

impl Spectrum {
    #[inline]
    pub fn eigenvalue(self, l: usize) -> f64 {
        match self {
            Spectrum::Paper => laplace_eigenvalue(l),
            Spectrum::RicciShifted => laplace_eigenvalue(l) - 2.0,
        }
    }

    /// First positive eigenvalue (Poincaré constant).
    pub fn first_positive(self) -> f64 {
        match self {
            Spectrum::Paper => 2.0,
            Spectrum::RicciShifted => 4.0,
        }
    }

    pub fn as_flag(self) -> u8 {
        match self {
            Spectrum::Paper => 0,
            Spectrum::RicciShifted => 1,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(Spectrum::Paper),
            1 => Some(Spectrum::RicciShifted),
            _ => None,
        }
    }
}

impl std::str::FromStr for Spectrum {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(Spectrum::Paper),
            "ricci_shifted" => Ok(Spectrum::RicciShifted),
            other => Err(format!(
                "unknown spectrum '{other}' (expected paper or ricci_shifted)"
            )),
        }
    }
}

/// Shared, read-only operator setup: physical constants plus the transform
/// used for nonlinear products.
#[derive(Debug)]
pub struct OperatorContext {
    pub lmax: usize,
    pub nu: f64,
    pub omega: f64,
    pub spectrum: Spectrum,
    pub dealias: bool,
    transform: SphericalTransform,
}

impl OperatorContext {
    pub fn new(
        lmax: usize,
        nu: f64,
        omega: f64,
        spectrum: Spectrum,
        grid: QuadratureGrid,
        dealias: bool,
    ) -> Result<Self> {
        if lmax < 1 {
            return Err(Error::Domain("lmax must be at least 1".into()));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!(
                "viscosity must be positive, got {nu}"
            )));
        }
        if !omega.is_finite() {
            return Err(Error::Domain("rotation rate must be finite".into()));
        }
        if dealias && !grid.satisfies_dealiasing(lmax) {
            let (a, b) = crate::harmonics::dealiased_size(lmax);
            return Err(Error::Resolution {
                lmax,
                reason: format!(
                    "dealiasing needs n_lat >= {a} and n_lon >= {b}, grid is {}x{}",
                    grid.n_lat, grid.n_lon
                ),
            });
        }
        let transform = SphericalTransform::new(lmax, grid)?;
        Ok(Self {
            lmax,
            nu,
            omega,
            spectrum,
            dealias,
            transform,
        })
    }

    /// Context on the minimal dealiasing grid.
    pub fn dealiased(lmax: usize, nu: f64, omega: f64, spectrum: Spectrum) -> Result<Self> {
        let grid = QuadratureGrid::dealiased(lmax)?;
        Self::new(lmax, nu, omega, spectrum, grid, true)
    }

    #[inline]
    pub fn transform(&self) -> &SphericalTransform {
        &self.transform
    }

    #[inline]
    pub fn grid(&self) -> &QuadratureGrid {
        self.transform.grid()
    }

    #[inline]
    pub fn eigenvalue(&self, l: usize) -> f64 {
        self.spectrum.eigenvalue(l)
    }

    pub(crate) fn check_field(&self, f: &SpectralField) -> Result<()> {
        if f.lmax() != self.lmax {
            return Err(Error::Shape(format!(
                "field lmax {} differs from context lmax {}",
                f.lmax(),
                self.lmax
            )));
        }
        Ok(())
    }
}

/// `A^s u`: multiplies stream coefficients by `λ_l^s`.
pub fn stokes_apply(u: &SpectralField, s: f64, spectrum: Spectrum) -> Result<SpectralField> {
    if s < 0.0 && spectrum == Spectrum::RicciShifted && u.lmax() >= 1 {
        return Err(Error::Domain(
            "negative powers of the Ricci-shifted Stokes operator are undefined on l = 1".into(),
        ));
    }
    Ok(u.map_modes(|l, _| {
        let lambda = spectrum.eigenvalue(l);
        let factor = if s == 0.0 { 1.0 } else { lambda.powf(s) };
        Complex64::new(factor, 0.0)
    }))
}

/// Vorticity `ζ = curl u` of `u = Curl ψ`: `ζ_{l,m} = l(l+1) ψ_{l,m}`.
pub fn curl_scalar(u: &SpectralField) -> SpectralField {
    u.map_modes(|l, _| Complex64::new(laplace_eigenvalue(l), 0.0))
        .with_kind(FieldKind::Scalar)
}

/// H inner product of two divergence-free fields given by stream functions:
/// `(Curl ψ, Curl χ) = Σ l(l+1) ψ conj(χ)`.
pub fn h_inner(a: &SpectralField, b: &SpectralField) -> f64 {
    a.weighted_inner(b, laplace_eigenvalue)
}
