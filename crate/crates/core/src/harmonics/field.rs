use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::QuadratureGrid;
use super::legendre::{tri_index, tri_len};
use crate::error::{Error, Result};

/// What a set of spectral coefficients represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Stream function ψ of the divergence-free field `u = Curl ψ`; `l >= 1`.
    Stream,
    /// Plain scalar including the `l = 0` mean.
    Scalar,
}

impl FieldKind {
    #[inline]
    pub fn first_degree(self) -> usize {
        match self {
            FieldKind::Stream => 1,
            FieldKind::Scalar => 0,
        }
    }

    /// Number of triangle slots skipped at the front of the storage.
    #[inline]
    fn storage_offset(self) -> usize {
        match self {
            FieldKind::Stream => 1,
            FieldKind::Scalar => 0,
        }
    }
}

/// Complex coefficients `ψ_{l,m}`, `0 <= m <= l <= lmax`, stored l-major and
/// m-minor. Negative orders follow from `ψ_{l,−m} = (−1)^m conj(ψ_{l,m})`,
/// so every field is real on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    lmax: usize,
    kind: FieldKind,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(lmax: usize, kind: FieldKind) -> Self {
        let n = Self::len_for(lmax, kind);
        Self {
            lmax,
            kind,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len_for(lmax: usize, kind: FieldKind) -> usize {
        tri_len(lmax) - kind.storage_offset()
    }

    pub fn from_coeffs(lmax: usize, kind: FieldKind, coeffs: Vec<Complex64>) -> Result<Self> {
        let n = Self::len_for(lmax, kind);
        if coeffs.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} coefficients for lmax {lmax} ({kind:?}), got {}",
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Domain(format!("coefficient {bad} is not finite")));
        }
        Ok(Self { lmax, kind, coeffs })
    }

    /// A stream field with a single unit coefficient at `(l, m)`. For `m > 0`
    /// the real field it represents is `Y_{l,m} + conj(Y_{l,m})`.
    pub fn single_mode(
        lmax: usize,
        kind: FieldKind,
        l: usize,
        m: usize,
        value: Complex64,
    ) -> Result<Self> {
        let mut f = Self::zeros(lmax, kind);
        f.set(l, m, value)?;
        Ok(f)
    }

    /// Stream field of the H-normalized basis vector `Z_{l,0}` (`m = 0`) or
    /// `(Z_{l,m} + conj Z_{l,m})/√2` (`m > 0`), so its H norm is one.
    pub fn basis_mode(lmax: usize, l: usize, m: usize) -> Result<Self> {
        let lambda = (l * (l + 1)) as f64;
        let amp = if m == 0 {
            1.0
        } else {
            std::f64::consts::FRAC_1_SQRT_2
        };
        Self::single_mode(
            lmax,
            FieldKind::Stream,
            l,
            m,
            Complex64::new(amp / lambda.sqrt(), 0.0),
        )
    }

    /// Random band-limited field with standard normal coefficients scaled by
    /// `decay(l)`; `m = 0` entries are real.
    pub fn random<R: Rng + ?Sized>(
        lmax: usize,
        kind: FieldKind,
        rng: &mut R,
        decay: impl Fn(usize) -> f64,
    ) -> Self {
        let mut f = Self::zeros(lmax, kind);
        for l in kind.first_degree()..=lmax {
            let s = decay(l);
            for m in 0..=l {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = if m == 0 {
                    0.0
                } else {
                    rng.sample(StandardNormal)
                };
                let idx = f.index(l, m);
                f.coeffs[idx] = Complex64::new(re * s, im * s);
            }
        }
        f
    }

    #[inline]
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    #[inline]
    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Position of `(l, m)` in the coefficient vector.
    #[inline]
    pub fn index(&self, l: usize, m: usize) -> usize {
        debug_assert!(m <= l && l <= self.lmax && l >= self.kind.first_degree());
        tri_index(l, m) - self.kind.storage_offset()
    }

    pub fn get(&self, l: usize, m: usize) -> Complex64 {
        if l < self.kind.first_degree() || l > self.lmax || m > l {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[self.index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: usize, value: Complex64) -> Result<()> {
        if l < self.kind.first_degree() || l > self.lmax || m > l {
            return Err(Error::Domain(format!(
                "mode ({l}, {m}) outside {:?} field with lmax {}",
                self.kind, self.lmax
            )));
        }
        let idx = self.index(l, m);
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Iterates `(l, m, coefficient)` in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let first = self.kind.first_degree();
        (first..=self.lmax)
            .flat_map(|l| (0..=l).map(move |m| (l, m)))
            .zip(self.coeffs.iter())
            .map(|((l, m), c)| (l, m, *c))
    }

    /// Multiplies every coefficient by `f(l, m)`.
    pub fn map_modes(&self, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut out = self.clone();
        let first = self.kind.first_degree();
        let mut idx = 0;
        for l in first..=self.lmax {
            for m in 0..=l {
                out.coeffs[idx] *= f(l, m);
                idx += 1;
            }
        }
        out
    }

    /// Coefficients on the full `0..=lmax` triangle (zero `l = 0` for streams).
    pub fn to_full_triangle(&self) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); tri_len(self.lmax)];
        full[self.kind.storage_offset()..].copy_from_slice(&self.coeffs);
        full
    }

    pub fn from_full_triangle(lmax: usize, kind: FieldKind, full: &[Complex64]) -> Self {
        Self {
            lmax,
            kind,
            coeffs: full[kind.storage_offset()..tri_len(lmax)].to_vec(),
        }
    }

    /// Same coefficients truncated or zero-padded to a new band limit.
    pub fn with_lmax(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax, self.kind);
        for (l, m, c) in self.modes() {
            if l <= lmax {
                let idx = out.index(l, m);
                out.coeffs[idx] = c;
            }
        }
        out
    }

    pub fn with_kind(&self, kind: FieldKind) -> Self {
        let mut out = Self::zeros(self.lmax, kind);
        for (l, m, c) in self.modes() {
            if l >= kind.first_degree() {
                let idx = out.index(l, m);
                out.coeffs[idx] = c;
            }
        }
        out
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.lmax, other.lmax, "band limits differ");
        assert_eq!(self.kind, other.kind, "field kinds differ");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.clone();
        out.add_assign_scaled(other, 1.0);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.clone();
        out.add_assign_scaled(other, -1.0);
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: f64) {
        self.check_compatible(other);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    /// Real L² pairing of the scalar functions `Σ a_{l,m} Y_{l,m}` and
    /// `Σ b_{l,m} Y_{l,m}` (conjugate-symmetric completion included).
    pub fn scalar_inner(&self, other: &Self) -> f64 {
        self.check_compatible(other);
        self.weighted_inner(other, |_| 1.0)
    }

    /// `Σ_l w(l) Σ_{m=−l..l} a_{l,m} conj(b_{l,m})`, real by symmetry.
    pub fn weighted_inner(&self, other: &Self, w: impl Fn(usize) -> f64) -> f64 {
        self.check_compatible(other);
        let mut total = 0.0;
        for ((l, m, a), b) in self.modes().zip(other.coeffs.iter()) {
            let p = (a * b.conj()).re;
            let mult = if m == 0 { 1.0 } else { 2.0 };
            total += w(l) * mult * p;
        }
        total
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.check_compatible(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `m = 0` coefficients must be real for the field to be real.
    pub fn is_real_consistent(&self, tol: f64) -> bool {
        self.modes().all(|(_, m, c)| m != 0 || c.im.abs() <= tol)
    }
}

/// Ring-major scalar values on a quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGridField {
    pub n_lat: usize,
    pub n_lon: usize,
    pub values: Vec<f64>,
}

impl ScalarGridField {
    pub fn zeros(grid: &QuadratureGrid) -> Self {
        Self {
            n_lat: grid.n_lat,
            n_lon: grid.n_lon,
            values: vec![0.0; grid.n_points()],
        }
    }

    pub fn from_fn(grid: &QuadratureGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_points());
        for &t in &grid.theta {
            for &p in &grid.longitudes {
                values.push(f(t, p));
            }
        }
        Self {
            n_lat: grid.n_lat,
            n_lon: grid.n_lon,
            values,
        }
    }

    pub fn check_shape(&self, grid: &QuadratureGrid) -> Result<()> {
        if self.n_lat != grid.n_lat
            || self.n_lon != grid.n_lon
            || self.values.len() != grid.n_points()
        {
            return Err(Error::Shape(format!(
                "scalar field {}x{} ({} values) does not match grid {}x{}",
                self.n_lat,
                self.n_lon,
                self.values.len(),
                grid.n_lat,
                grid.n_lon
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "scalar grid field has non-finite values".into(),
            ));
        }
        Ok(())
    }
}

/// Orthonormal-frame components `(u_θ, u_φ)` of a tangent field, ring-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentGridField {
    pub n_lat: usize,
    pub n_lon: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl TangentGridField {
    pub fn zeros(grid: &QuadratureGrid) -> Self {
        Self {
            n_lat: grid.n_lat,
            n_lon: grid.n_lon,
            theta: vec![0.0; grid.n_points()],
            phi: vec![0.0; grid.n_points()],
        }
    }

    pub fn from_fn(grid: &QuadratureGrid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut out = Self::zeros(grid);
        for (i, &t) in grid.theta.iter().enumerate() {
            for (j, &p) in grid.longitudes.iter().enumerate() {
                let (a, b) = f(t, p);
                out.theta[i * grid.n_lon + j] = a;
                out.phi[i * grid.n_lon + j] = b;
            }
        }
        out
    }

    pub fn check_shape(&self, grid: &QuadratureGrid) -> Result<()> {
        let n = grid.n_points();
        if self.n_lat != grid.n_lat
            || self.n_lon != grid.n_lon
            || self.theta.len() != n
            || self.phi.len() != n
        {
            return Err(Error::Shape(format!(
                "tangent field {}x{} does not match grid {}x{}",
                self.n_lat, self.n_lon, grid.n_lat, grid.n_lon
            )));
        }
        if self.theta.iter().chain(&self.phi).any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "tangent grid field has non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n_lat: self.n_lat,
            n_lon: self.n_lon,
            theta: self
                .theta
                .iter()
                .zip(&other.theta)
                .map(|(a, b)| a + b)
                .collect(),
            phi: self
                .phi
                .iter()
                .zip(&other.phi)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Pointwise `u · w`.
    pub fn dot(&self, other: &Self) -> Vec<f64> {
        self.theta
            .iter()
            .zip(&self.phi)
            .zip(other.theta.iter().zip(&other.phi))
            .map(|((a, b), (c, d))| a * c + b * d)
            .collect()
    }
}
