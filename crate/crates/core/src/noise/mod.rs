//! Subordinated cylindrical stable noise `L = W(X)`.
//!
//! One `β/2`-stable subordinator `X` is shared by every coordinate; each
//! real coordinate of the truncated orthonormal basis of H carries an
//! independent Wiener process evaluated at `X`.

mod increments;
mod sampler;
mod summability;

use std::fmt;
use std::str::FromStr;

pub use increments::{
    apply_covariance, levy_increment_block, moment_scaling_estimate, substep_rng,
    LevyIncrementBlock, NoiseGenerator, Purpose,
};
pub use sampler::sample_positive_stable;
pub use summability::{check_summability, Summability, DEFAULT_L_STAR};

use crate::error::{Error, Result};

/// Degree-dependent noise amplitudes `σ_l`.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaRule {
    /// `σ_l = l^{−γ}`.
    Power { gamma: f64 },
    /// `σ_l = value` for `l ≤ lmax`, zero above.
    Band { lmax: usize, value: f64 },
    /// `σ_l = value` for every `l`.
    Const { value: f64 },
    /// Explicit `σ_1, σ_2, …`; zero past the end.
    Table(Vec<f64>),
}

impl SigmaRule {
    pub fn sigma(&self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        match self {
            SigmaRule::Power { gamma } => (l as f64).powf(-gamma),
            SigmaRule::Band { lmax, value } => {
                if l <= *lmax {
                    *value
                } else {
                    0.0
                }
            }
            SigmaRule::Const { value } => *value,
            SigmaRule::Table(v) => v.get(l - 1).copied().unwrap_or(0.0),
        }
    }

    /// True when `σ_l = 0` for every `l`.
    pub fn is_zero(&self) -> bool {
        match self {
            SigmaRule::Power { .. } => false,
            SigmaRule::Band { lmax, value } => *lmax == 0 || *value == 0.0,
            SigmaRule::Const { value } => *value == 0.0,
            SigmaRule::Table(v) => v.iter().all(|&s| s == 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            SigmaRule::Power { gamma } => gamma.is_finite(),
            SigmaRule::Band { value, .. } | SigmaRule::Const { value } => value.is_finite(),
            SigmaRule::Table(v) => v.iter().all(|s| s.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "non-finite noise amplitude in {self}"
            )))
        }
    }
}

impl fmt::Display for SigmaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaRule::Power { gamma } => write!(f, "power:gamma={gamma}"),
            SigmaRule::Band { lmax, value } => write!(f, "band:l<={lmax},value={value}"),
            SigmaRule::Const { value } => write!(f, "const:{value}"),
            SigmaRule::Table(v) => {
                write!(f, "table:")?;
                for (i, s) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SigmaRule {
    type Err = String;

    /// Accepts `power:gamma=G`, `band:l<=N,value=V`, `const:V` and
    /// `table:s1,s2,...`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("sigma rule '{s}' lacks a ':' separator"))?;
        let num = |t: &str| -> std::result::Result<f64, String> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{t}' is not a number in sigma rule '{s}'"))
        };
        match kind.trim() {
            "power" => {
                let g = rest
                    .trim()
                    .strip_prefix("gamma=")
                    .ok_or_else(|| format!("expected power:gamma=<value>, got '{s}'"))?;
                Ok(SigmaRule::Power { gamma: num(g)? })
            }
            "band" => {
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| format!("expected band:l<=N,value=V, got '{s}'"))?;
                let n = a
                    .trim()
                    .strip_prefix("l<=")
                    .ok_or_else(|| format!("expected band:l<=N,value=V, got '{s}'"))?;
                let lmax = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("'{n}' is not a degree in sigma rule '{s}'"))?;
                let v = b
                    .trim()
                    .strip_prefix("value=")
                    .ok_or_else(|| format!("expected band:l<=N,value=V, got '{s}'"))?;
                Ok(SigmaRule::Band {
                    lmax,
                    value: num(v)?,
                })
            }
            "const" => Ok(SigmaRule::Const { value: num(rest)? }),
            "table" => {
                let v = rest
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(num)
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Ok(SigmaRule::Table(v))
            }
            other => Err(format!(
                "unknown sigma rule '{other}' (expected power, band, const or table)"
            )),
        }
    }
}

/// Noise parameters shared by the OU process and the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub beta: f64,
    pub sigma: SigmaRule,
    pub delta: f64,
    pub seed: u64,
    pub n_substeps: u32,
}

impl NoiseSpec {
    pub fn new(
        beta: f64,
        sigma: SigmaRule,
        delta: f64,
        seed: u64,
        n_substeps: u32,
    ) -> Result<Self> {
        let spec = Self {
            beta,
            sigma,
            delta,
            seed,
            n_substeps,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Noise-free spec (`σ ≡ 0`, Gaussian index).
    pub fn zero(seed: u64) -> Self {
        Self {
            beta: 2.0,
            sigma: SigmaRule::Const { value: 0.0 },
            delta: 0.0,
            seed,
            n_substeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 2.0) {
            return Err(Error::Domain(format!(
                "stability index beta must lie in (0, 2], got {}",
                self.beta
            )));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Domain(format!(
                "regularity exponent delta must be >= 0, got {}",
                self.delta
            )));
        }
        if self.n_substeps == 0 {
            return Err(Error::Domain("n_substeps must be at least 1".into()));
        }
        self.sigma.validate()
    }

    #[inline]
    pub fn sigma(&self, l: usize) -> f64 {
        self.sigma.sigma(l)
    }

    /// Subordinator index `β/2`.
    #[inline]
    pub fn subordinator_index(&self) -> f64 {
        self.beta / 2.0
    }
}

/// Rejects `p ∉ (0, β)`, where `E|L|^p` is infinite.
pub fn check_moment_order(p: f64, beta: f64) -> Result<()> {
    if p > 0.0 && p < beta {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "moment order p = {p} requires 0 < p < beta = {beta}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_presets_parse() {
        let p: SigmaRule = "power:gamma=2.0".parse().unwrap();
        assert_eq!(p, SigmaRule::Power { gamma: 2.0 });
        assert_eq!(p.sigma(2), 0.25);
        assert_eq!(p.sigma(0), 0.0);

        let b: SigmaRule = "band:l<=8,value=0.1".parse().unwrap();
        assert_eq!(b.sigma(8), 0.1);
        assert_eq!(b.sigma(9), 0.0);

        let c: SigmaRule = "const:0.05".parse().unwrap();
        assert_eq!(c.sigma(100), 0.05);

        let t: SigmaRule = "table:1,0,0.5".parse().unwrap();
        assert_eq!(t.sigma(1), 1.0);
        assert_eq!(t.sigma(3), 0.5);
        assert_eq!(t.sigma(4), 0.0);

        for bad in [
            "power",
            "power:g=1",
            "band:l<=x,value=1",
            "cubic:1",
            "const:abc",
        ] {
            assert!(bad.parse::<SigmaRule>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "power:gamma=2",
            "band:l<=8,value=0.1",
            "const:0.05",
            "table:1,0.5",
        ] {
            let r: SigmaRule = s.parse().unwrap();
            assert_eq!(r.to_string().parse::<SigmaRule>().unwrap(), r);
        }
    }

    #[test]
    fn spec_validation() {
        let s = SigmaRule::Const { value: 1.0 };
        assert!(NoiseSpec::new(0.0, s.clone(), 0.0, 1, 1).is_err());
        assert!(NoiseSpec::new(2.1, s.clone(), 0.0, 1, 1).is_err());
        assert!(NoiseSpec::new(1.5, s.clone(), -0.1, 1, 1).is_err());
        assert!(NoiseSpec::new(1.5, s.clone(), 0.0, 1, 0).is_err());
        assert!(NoiseSpec::new(2.0, s, 0.5, 1, 4).is_ok());
        assert!(check_moment_order(1.8, 1.5).is_err());
        assert!(check_moment_order(1.0, 1.5).is_ok());
    }

    #[test]
    fn zero_rules() {
        assert!(SigmaRule::Band {
            lmax: 0,
            value: 1.0
        }
        .is_zero());
        assert!(SigmaRule::Const { value: 0.0 }.is_zero());
        assert!(!SigmaRule::Power { gamma: 3.0 }.is_zero());
    }
}
