use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{check_moment_order, sample_positive_stable, NoiseSpec};
use crate::error::{Error, Result};
use crate::harmonics::{laplace_eigenvalue, FieldKind, SpectralField};

/// Role of a random stream inside one substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Subordinator,
    /// Gaussian coordinates of degree `l`.
    Degree(usize),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Subordinator => 0,
            Purpose::Degree(l) => 1 + l as u64,
        }
    }
}

/// Counter-based generator for `(seed, path, purpose, counter)`.
///
/// The first three words form the ChaCha key and the counter selects the
/// stream, so every substep and degree has its own reproducible sequence.
pub fn substep_rng(seed: u64, path: u64, purpose: Purpose, counter: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&path.to_le_bytes());
    key[16..24].copy_from_slice(&purpose.code().to_le_bytes());
    key[24..].copy_from_slice(b"snse-lvy");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(counter);
    rng
}

/// Increment of the subordinated noise over one interval.
///
/// `dl` stores the unscaled real coordinates: `re` of an `m = 0` entry, and
/// `(re, im)` as the two coordinates of an `m > 0` pair. Conditional on `dx`
/// each coordinate is `Normal(0, dx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyIncrementBlock {
    pub dt: f64,
    pub dx: f64,
    pub dl: SpectralField,
}

impl LevyIncrementBlock {
    pub fn zeros(lmax: usize, dt: f64) -> Self {
        Self {
            dt,
            dx: 0.0,
            dl: SpectralField::zeros(lmax, FieldKind::Stream),
        }
    }

    /// Concatenates the following interval; subordinator and Gaussian
    /// increments both add.
    pub fn absorb(&mut self, next: &LevyIncrementBlock) {
        self.dt += next.dt;
        self.dx += next.dx;
        self.dl.add_assign_scaled(&next.dl, 1.0);
    }
}

fn fill_degree<R: Rng + ?Sized>(dl: &mut SpectralField, l: usize, scale: f64, rng: &mut R) {
    for m in 0..=l {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = if m == 0 {
            0.0
        } else {
            rng.sample(StandardNormal)
        };
        let idx = dl.index(l, m);
        dl.coeffs_mut()[idx] = Complex64::new(scale * a, scale * b);
    }
}

/// One block from a single generator: `ΔX` first, then `ΔL = √ΔX · ξ`.
pub fn levy_increment_block<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    lmax: usize,
    dt: f64,
    rng: &mut R,
) -> Result<LevyIncrementBlock> {
    let dx = sample_positive_stable(spec.subordinator_index(), dt, rng)?;
    let mut block = LevyIncrementBlock {
        dt,
        dx,
        dl: SpectralField::zeros(lmax, FieldKind::Stream),
    };
    let scale = dx.sqrt();
    for l in 1..=lmax {
        fill_degree(&mut block.dl, l, scale, rng);
    }
    Ok(block)
}

/// `G ΔL` as a stream-function increment.
///
/// An `m = 0` coordinate maps to `ψ = σ_l a / √λ_l`, an `m > 0` pair to
/// `ψ = σ_l (a + ib) / √(2λ_l)`, so `|G ΔL|²_H = Σ σ_l² (a² + b²)`.
pub fn apply_covariance(block: &LevyIncrementBlock, spec: &NoiseSpec) -> SpectralField {
    block.dl.map_modes(|l, m| {
        let s = spec.sigma(l);
        let norm = if m == 0 {
            laplace_eigenvalue(l).sqrt()
        } else {
            (2.0 * laplace_eigenvalue(l)).sqrt()
        };
        Complex64::new(s / norm, 0.0)
    })
}

/// Reproducible source of noise blocks for one sample path.
///
/// Base blocks have width `width` and are keyed by their global index; a
/// coarsened generator returns sums of consecutive base blocks, so runs at
/// different substep resolutions see the same underlying path.
#[derive(Debug, Clone)]
pub struct NoiseGenerator {
    index: f64,
    lmax: usize,
    seed: u64,
    path: u64,
    width: f64,
    aggregate: u64,
}

impl NoiseGenerator {
    pub fn new(spec: &NoiseSpec, lmax: usize, path: u64, width: f64) -> Result<Self> {
        spec.validate()?;
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Domain(format!(
                "substep width must be positive, got {width}"
            )));
        }
        Ok(Self {
            index: spec.subordinator_index(),
            lmax,
            seed: spec.seed,
            path,
            width,
            aggregate: 1,
        })
    }

    /// Generator whose blocks each cover `factor` base blocks.
    pub fn coarsened(&self, factor: u64) -> Self {
        assert!(factor >= 1, "coarsening factor must be positive");
        Self {
            aggregate: self.aggregate * factor,
            ..self.clone()
        }
    }

    /// Width of the blocks returned by [`block`](Self::block).
    pub fn width(&self) -> f64 {
        self.width * self.aggregate as f64
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    fn base_block(&self, k: u64) -> LevyIncrementBlock {
        let mut sub = substep_rng(self.seed, self.path, Purpose::Subordinator, k);
        let dx = sample_positive_stable(self.index, self.width, &mut sub)
            .expect("index validated at construction");
        let mut dl = SpectralField::zeros(self.lmax, FieldKind::Stream);
        let scale = dx.sqrt();
        for l in 1..=self.lmax {
            let mut rng = substep_rng(self.seed, self.path, Purpose::Degree(l), k);
            fill_degree(&mut dl, l, scale, &mut rng);
        }
        LevyIncrementBlock {
            dt: self.width,
            dx,
            dl,
        }
    }

    /// Block number `k` at this generator's width.
    pub fn block(&self, k: u64) -> LevyIncrementBlock {
        let first = k * self.aggregate;
        let mut out = self.base_block(first);
        for j in 1..self.aggregate {
            out.absorb(&self.base_block(first + j));
        }
        out
    }
}

/// Monte-Carlo estimates of `E|A^δ G L(t)|^p` for each `t`.
///
/// Every `(path, t)` pair uses its own stream, so estimates at different
/// times are independent.
pub fn moment_scaling_estimate(
    spec: &NoiseSpec,
    lmax: usize,
    delta: f64,
    p: f64,
    t_list: &[f64],
    n_paths: usize,
) -> Result<Vec<(f64, f64)>> {
    check_moment_order(p, spec.beta)?;
    if n_paths == 0 {
        return Err(Error::Domain("n_paths must be positive".into()));
    }
    let weights: Vec<f64> = (0..=lmax)
        .map(|l| {
            if l == 0 {
                0.0
            } else {
                let s = spec.sigma(l);
                s * s * laplace_eigenvalue(l).powf(2.0 * delta)
            }
        })
        .collect();
    t_list
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("times must be positive, got {t}")));
            }
            let samples: Vec<f64> = (0..n_paths as u64)
                .into_par_iter()
                .map(|path| {
                    let mut rng = substep_rng(spec.seed, path, Purpose::Subordinator, j as u64);
                    let block =
                        levy_increment_block(spec, lmax, t, &mut rng).expect("spec validated");
                    let sq: f64 = block
                        .dl
                        .modes()
                        .map(|(l, _, c)| weights[l] * c.norm_sqr())
                        .sum();
                    sq.powf(p / 2.0)
                })
                .collect();
            Ok((t, samples.iter().sum::<f64>() / n_paths as f64))
        })
        .collect()
}
