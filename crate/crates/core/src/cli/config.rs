//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! lmax = 12            # required
//! dealias = true
//! spectrum = "paper"   # or "ricci_shifted"
//!
//! [solver]
//! dt = 0.01            # required
//! t_end = 1.0          # required
//! nu = 1.0
//! scheme = "imex_heun" # imex_euler | imex_heun | picard
//!
//! [noise]
//! beta = 1.5
//! sigma = "power:gamma=2"
//! delta = 0.5
//!
//! [initial]
//! kind = "random"      # zero | mode | random
//! amplitude = 0.5
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use super::Mode;
use crate::harmonics::{gauss_legendre_grid, FieldKind, QuadratureGrid, SpectralField};
use crate::noise::{check_moment_order, NoiseSpec, SigmaRule};
use crate::operators::{OperatorContext, Spectrum};
use crate::solver::{Scheme, SolverConfig};

/// Configuration problems, each tied to a line of the source file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: missing required key `{key}`")]
    MissingKey { key: String, line: usize },

    #[error("line {line}: type mismatch: {message}")]
    TypeMismatch { line: usize, message: String },

    #[error("line {line}: invalid `{key}`: {message}")]
    Constraint {
        key: String,
        line: usize,
        message: String,
    },

    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::MissingKey { line, .. }
            | ConfigError::TypeMismatch { line, .. }
            | ConfigError::Constraint { line, .. } => Some(*line),
            ConfigError::Read { .. } => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Spanned<String>>,
    seed: Option<Spanned<u64>>,
    grid: Option<Spanned<RawGrid>>,
    solver: Option<Spanned<RawSolver>>,
    noise: Option<Spanned<RawNoise>>,
    initial: Option<Spanned<RawField>>,
    forcing: Option<Spanned<RawField>>,
    output: Option<Spanned<RawOutput>>,
    verify: Option<Spanned<RawVerify>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    lmax: Option<Spanned<usize>>,
    n_lat: Option<Spanned<usize>>,
    n_lon: Option<Spanned<usize>>,
    dealias: Option<Spanned<bool>>,
    spectrum: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    dt: Option<Spanned<f64>>,
    t_end: Option<Spanned<f64>>,
    nu: Option<Spanned<f64>>,
    omega: Option<Spanned<f64>>,
    alpha: Option<Spanned<f64>>,
    scheme: Option<Spanned<String>>,
    picard_tol: Option<Spanned<f64>>,
    picard_max_iter: Option<Spanned<usize>>,
    nonlinear: Option<Spanned<bool>>,
    include_coriolis_in_ou: Option<Spanned<bool>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    beta: Option<Spanned<f64>>,
    sigma: Option<Spanned<String>>,
    delta: Option<Spanned<f64>>,
    n_substeps: Option<Spanned<u32>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    kind: Option<Spanned<String>>,
    l: Option<Spanned<usize>>,
    m: Option<Spanned<usize>>,
    amplitude: Option<Spanned<f64>>,
    decay: Option<Spanned<f64>>,
    seed: Option<Spanned<u64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<Spanned<String>>,
    snapshot_every: Option<Spanned<u64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    n_paths: Option<Spanned<usize>>,
    p: Option<Spanned<f64>>,
    times: Option<Spanned<Vec<f64>>>,
    alphas: Option<Spanned<Vec<f64>>>,
}

/// Fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub solver: SolverConfig,
    pub noise: NoiseSpec,
    pub output_dir: PathBuf,
    pub snapshot_every: u64,
    /// Ensemble size (paths, or random samples in `verify-operators`);
    /// each mode has its own default.
    pub n_paths: Option<usize>,
    /// Moment order for `verify-noise` and `verify-ou`.
    pub p: f64,
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl ExperimentConfig {
    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.noise.seed = seed;
        self
    }
}

struct Src<'a> {
    text: &'a str,
}

impl Src<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn constraint<T>(&self, key: &str, v: &Spanned<T>, message: impl Into<String>) -> ConfigError {
        ConfigError::Constraint {
            key: key.into(),
            line: self.line(v.span()),
            message: message.into(),
        }
    }
}

fn section_line<T>(src: &Src, s: &Option<Spanned<T>>) -> usize {
    s.as_ref().map(|s| src.line(s.span())).unwrap_or(1)
}

fn from_toml_error(src: &Src, e: toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| src.line(s)).unwrap_or(1);
    let message = e.message().trim().to_string();
    if message.starts_with("invalid type") || message.starts_with("invalid value") {
        ConfigError::TypeMismatch { line, message }
    } else if let Some(rest) = message.strip_prefix("missing field ") {
        ConfigError::MissingKey {
            key: rest.trim_matches('`').into(),
            line,
        }
    } else {
        ConfigError::Syntax { line, message }
    }
}

fn val<T: Clone>(v: &Option<Spanned<T>>, default: T) -> T {
    v.as_ref().map(|s| s.get_ref().clone()).unwrap_or(default)
}

fn parse_enum<T: FromStr<Err = String>>(
    src: &Src,
    key: &str,
    v: &Option<Spanned<String>>,
    default: T,
) -> Result<T, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) => s
            .get_ref()
            .parse()
            .map_err(|m: String| src.constraint(key, s, m)),
    }
}

fn check<T>(
    src: &Src,
    key: &str,
    v: &Option<Spanned<T>>,
    ok: impl Fn(&T) -> bool,
    msg: &str,
) -> Result<(), ConfigError> {
    match v {
        Some(s) if !ok(s.get_ref()) => Err(src.constraint(key, s, msg)),
        _ => Ok(()),
    }
}

fn build_field(
    src: &Src,
    name: &str,
    raw: &Option<Spanned<RawField>>,
    lmax: usize,
) -> Result<SpectralField, ConfigError> {
    let Some(raw) = raw else {
        return Ok(SpectralField::zeros(lmax, FieldKind::Stream));
    };
    let r = raw.get_ref();
    let kind = val(&r.kind, "zero".to_string());
    let amplitude = val(&r.amplitude, 1.0);
    check(
        src,
        &format!("{name}.amplitude"),
        &r.amplitude,
        |a| a.is_finite(),
        "must be finite",
    )?;
    match kind.as_str() {
        "zero" => Ok(SpectralField::zeros(lmax, FieldKind::Stream)),
        "mode" => {
            let l = r.l.as_ref().ok_or_else(|| ConfigError::MissingKey {
                key: format!("{name}.l"),
                line: src.line(raw.span()),
            })?;
            let m = val(&r.m, 0);
            if *l.get_ref() < 1 || *l.get_ref() > lmax {
                return Err(src.constraint(
                    &format!("{name}.l"),
                    l,
                    format!("degree must lie in 1..={lmax}"),
                ));
            }
            if m > *l.get_ref() {
                let span = r.m.as_ref().expect("m > 0 implies present");
                return Err(src.constraint(
                    &format!("{name}.m"),
                    span,
                    "order must satisfy m <= l",
                ));
            }
            Ok(SpectralField::basis_mode(lmax, *l.get_ref(), m)
                .expect("checked degree and order")
                .scale(amplitude))
        }
        "random" => {
            let decay = val(&r.decay, 2.0);
            check(
                src,
                &format!("{name}.decay"),
                &r.decay,
                |d| d.is_finite(),
                "must be finite",
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(val(&r.seed, 0));
            Ok(SpectralField::random(
                lmax,
                FieldKind::Stream,
                &mut rng,
                |l| amplitude * (l as f64).powf(-decay),
            ))
        }
        other => Err(src.constraint(
            &format!("{name}.kind"),
            r.kind.as_ref().expect("non-default kind is present"),
            format!("unknown field kind '{other}' (expected zero, mode or random)"),
        )),
    }
}

/// Parses and validates configuration text. `mode` overrides the file's
/// `mode` key.
pub fn parse_config_str(text: &str, mode: Option<Mode>) -> Result<ExperimentConfig, ConfigError> {
    let src = Src { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| from_toml_error(&src, e))?;

    let mode = match mode {
        Some(m) => m,
        None => parse_enum(&src, "mode", &raw.mode, Mode::Simulate)?,
    };
    let seed = val(&raw.seed, 0);

    let grid_line = section_line(&src, &raw.grid);
    let grid = raw.grid.as_ref().map(|g| g.get_ref());
    let lmax_s = grid
        .and_then(|g| g.lmax.as_ref())
        .ok_or_else(|| ConfigError::MissingKey {
            key: "grid.lmax".into(),
            line: grid_line,
        })?;
    let lmax = *lmax_s.get_ref();
    if lmax < 1 {
        return Err(src.constraint("grid.lmax", lmax_s, "must be at least 1"));
    }
    let spectrum = parse_enum(
        &src,
        "grid.spectrum",
        &grid.and_then(|g| g.spectrum.clone()),
        Spectrum::Paper,
    )?;
    let dealias = grid.map(|g| val(&g.dealias, true)).unwrap_or(true);

    let solver_line = section_line(&src, &raw.solver);
    let s = raw.solver.as_ref().map(|s| s.get_ref());
    let required = |key: &str, v: Option<&Spanned<f64>>| {
        v.cloned().ok_or_else(|| ConfigError::MissingKey {
            key: format!("solver.{key}"),
            line: solver_line,
        })
    };
    let dt_s = required("dt", s.and_then(|s| s.dt.as_ref()))?;
    let t_end_s = required("t_end", s.and_then(|s| s.t_end.as_ref()))?;
    let dt = *dt_s.get_ref();
    let t_end = *t_end_s.get_ref();
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(src.constraint("solver.dt", &dt_s, "must be positive"));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(src.constraint("solver.t_end", &t_end_s, "must be at least dt"));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end {
        return Err(src.constraint(
            "solver.t_end",
            &t_end_s,
            format!("must be a whole multiple of dt = {dt}"),
        ));
    }

    let mut cfg = SolverConfig::new(lmax, dt, t_end);
    cfg.spectrum = spectrum;
    cfg.dealias = dealias;
    if let Some(s) = s {
        check(
            &src,
            "solver.nu",
            &s.nu,
            |v| *v > 0.0 && v.is_finite(),
            "must be positive",
        )?;
        check(
            &src,
            "solver.omega",
            &s.omega,
            |v| v.is_finite(),
            "must be finite",
        )?;
        check(
            &src,
            "solver.alpha",
            &s.alpha,
            |v| *v >= 0.0 && v.is_finite(),
            "must be >= 0",
        )?;
        check(
            &src,
            "solver.picard_tol",
            &s.picard_tol,
            |v| *v > 0.0,
            "must be positive",
        )?;
        check(
            &src,
            "solver.picard_max_iter",
            &s.picard_max_iter,
            |v| *v >= 1,
            "must be at least 1",
        )?;
        cfg.nu = val(&s.nu, 1.0);
        cfg.omega = val(&s.omega, 0.0);
        cfg.alpha = val(&s.alpha, 0.0);
        cfg.scheme = parse_enum(&src, "solver.scheme", &s.scheme, Scheme::ImexHeun)?;
        cfg.picard_tol = val(&s.picard_tol, cfg.picard_tol);
        cfg.picard_max_iter = val(&s.picard_max_iter, cfg.picard_max_iter);
        cfg.nonlinear = val(&s.nonlinear, true);
        cfg.include_coriolis_in_ou = val(&s.include_coriolis_in_ou, true);
    }
    if spectrum == Spectrum::RicciShifted && cfg.alpha == 0.0 {
        let line = grid
            .and_then(|g| g.spectrum.as_ref())
            .map(|s| src.line(s.span()))
            .unwrap_or(grid_line);
        return Err(ConfigError::Constraint {
            key: "solver.alpha".into(),
            line,
            message: "ricci_shifted spectrum vanishes on l = 1 and needs alpha > 0".into(),
        });
    }

    // Grid: explicit sizes must resolve lmax (and the 2/3 rule when dealiasing).
    if let Some(g) = grid {
        if g.n_lat.is_some() || g.n_lon.is_some() {
            let (def_lat, def_lon) = crate::harmonics::dealiased_size(lmax);
            let n_lat = val(&g.n_lat, def_lat);
            let n_lon = val(&g.n_lon, def_lon);
            let where_ = g
                .n_lon
                .as_ref()
                .map(|s| src.line(s.span()))
                .or(g.n_lat.as_ref().map(|s| src.line(s.span())))
                .unwrap_or(grid_line);
            let err = |message: String| ConfigError::Constraint {
                key: "grid".into(),
                line: where_,
                message,
            };
            let grid = gauss_legendre_grid(n_lat, n_lon).map_err(|e| err(e.to_string()))?;
            if dealias && !grid.satisfies_dealiasing(lmax) {
                return Err(err(format!(
                    "dealiasing lmax = {lmax} needs n_lat >= {def_lat} and n_lon >= {def_lon}, got {n_lat} x {n_lon}"
                )));
            }
            OperatorContext::new(lmax, cfg.nu, cfg.omega, spectrum, grid, dealias)
                .map_err(|e| err(e.to_string()))?;
            cfg.grid = Some((n_lat, n_lon));
        } else if !dealias {
            // Without explicit sizes the 2/3-rule grid is used regardless.
            QuadratureGrid::dealiased(lmax).map_err(|e| ConfigError::Constraint {
                key: "grid".into(),
                line: grid_line,
                message: e.to_string(),
            })?;
        }
    }

    cfg.v0 = build_field(&src, "initial", &raw.initial, lmax)?;
    cfg.forcing = build_field(&src, "forcing", &raw.forcing, lmax)?;

    let n = raw.noise.as_ref().map(|n| n.get_ref());
    let beta_s = n.and_then(|n| n.beta.clone());
    let beta = val(&beta_s, 2.0);
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(src.constraint(
            "noise.beta",
            beta_s.as_ref().expect("non-default"),
            "must lie in (0, 2]",
        ));
    }
    let sigma: SigmaRule = parse_enum(
        &src,
        "noise.sigma",
        &n.and_then(|n| n.sigma.clone()),
        SigmaRule::Const { value: 0.0 },
    )?;
    if let Some(sig) = n.and_then(|n| n.sigma.as_ref()) {
        if NoiseSpec::new(beta, sigma.clone(), 0.0, 0, 1).is_err() {
            return Err(src.constraint("noise.sigma", sig, "amplitudes must be finite"));
        }
    }
    let delta_s = n.and_then(|n| n.delta.clone());
    check(
        &src,
        "noise.delta",
        &delta_s,
        |d| *d >= 0.0 && d.is_finite(),
        "must be >= 0",
    )?;
    let sub_s = n.and_then(|n| n.n_substeps.clone());
    check(
        &src,
        "noise.n_substeps",
        &sub_s,
        |k| *k >= 1,
        "must be at least 1",
    )?;
    let noise = NoiseSpec {
        beta,
        sigma,
        delta: val(&delta_s, 0.0),
        seed,
        n_substeps: val(&sub_s, 1),
    };

    let out = raw.output.as_ref().map(|o| o.get_ref());
    let output_dir = PathBuf::from(
        out.map(|o| val(&o.dir, "output".into()))
            .unwrap_or_else(|| "output".into()),
    );
    let snapshot_every = out.map(|o| val(&o.snapshot_every, 0)).unwrap_or(0);
    cfg.snapshot_every = snapshot_every;

    let v = raw.verify.as_ref().map(|v| v.get_ref());
    let n_paths_s = v.and_then(|v| v.n_paths.clone());
    check(
        &src,
        "verify.n_paths",
        &n_paths_s,
        |k| *k >= 1,
        "must be at least 1",
    )?;
    let p_s = v.and_then(|v| v.p.clone());
    let p = val(&p_s, 1.0);
    if matches!(mode, Mode::VerifyNoise | Mode::VerifyOu) && check_moment_order(p, beta).is_err() {
        let message = format!("p < β required (p = {p}, β = {beta})");
        return Err(match &p_s {
            Some(s) => src.constraint("verify.p", s, message),
            None => src.constraint(
                "noise.beta",
                beta_s.as_ref().expect("default β = 2 admits p = 1"),
                message,
            ),
        });
    }
    let times_s = v.and_then(|v| v.times.clone());
    check(
        &src,
        "verify.times",
        &times_s,
        |t| !t.is_empty() && t.iter().all(|x| *x > 0.0 && x.is_finite()),
        "must be a nonempty list of positive times",
    )?;
    let alphas_s = v.and_then(|v| v.alphas.clone());
    check(
        &src,
        "verify.alphas",
        &alphas_s,
        |a| !a.is_empty() && a.iter().all(|x| *x >= 0.0 && x.is_finite()),
        "must be a nonempty list of nonnegative values",
    )?;

    Ok(ExperimentConfig {
        mode,
        seed,
        solver: cfg,
        noise,
        output_dir,
        snapshot_every,
        n_paths: n_paths_s.map(|s| s.into_inner()),
        p,
        times: val(&times_s, vec![0.1, 1.0, 10.0]),
        alphas: val(&alphas_s, vec![0.0, 1.0, 10.0, 100.0]),
    })
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path, mode: Option<Mode>) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text, mode)
}
