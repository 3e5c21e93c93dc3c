//! Integrating-factor time stepping for `v = u − z`:
//!
//! `dv/dt + (νA + C) v = N(v) = −B(v + z) + αz + f`,
//!
//! coupled to the OU process `z`. The linear part is diagonal per mode and
//! integrated exactly; `N` is explicit with `z` held at its value at the
//! start of each step.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::diagnostics::{
    da_norm_sq, energy_residual, h_norm_sq, l4_norm, v_norm_sq, EnergyLedger, LedgerSample,
};
use crate::error::{Error, Result};
use crate::harmonics::{FieldKind, QuadratureGrid, SpectralField};
use crate::noise::{check_summability, NoiseGenerator, NoiseSpec, DEFAULT_L_STAR};
use crate::operators::{
    coriolis_apply, coriolis_multiplier, h_inner, nonlinear_b, CoriolisPath, OperatorContext,
    Spectrum,
};
use crate::ou::{ou_step, OUState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    ImexEuler,
    #[default]
    ImexHeun,
    Picard,
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "imex_euler" => Ok(Scheme::ImexEuler),
            "imex_heun" => Ok(Scheme::ImexHeun),
            "picard" => Ok(Scheme::Picard),
            other => Err(format!(
                "unknown scheme '{other}' (expected imex_euler, imex_heun or picard)"
            )),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ImexEuler => "imex_euler",
            Scheme::ImexHeun => "imex_heun",
            Scheme::Picard => "picard",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lmax: usize,
    pub dt: f64,
    pub t_end: f64,
    pub nu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Time-independent forcing `f`.
    pub forcing: SpectralField,
    pub v0: SpectralField,
    pub spectrum: Spectrum,
    /// Quadrature grid `(n_lat, n_lon)`; the 2/3-rule grid when `None`.
    pub grid: Option<(usize, usize)>,
    pub dealias: bool,
    /// When false, `B` is replaced by zero everywhere.
    pub nonlinear: bool,
    /// Keep a full state every this many steps (0: never).
    pub snapshot_every: u64,
    /// When false, `z` solves the OU equation without `C` and `v` carries `−Cz`.
    pub include_coriolis_in_ou: bool,
}

impl SolverConfig {
    /// Zero data with `ν = 1`, `Ω = α = 0`.
    pub fn new(lmax: usize, dt: f64, t_end: f64) -> Self {
        Self {
            lmax,
            dt,
            t_end,
            nu: 1.0,
            omega: 0.0,
            alpha: 0.0,
            scheme: Scheme::default(),
            picard_tol: 1e-12,
            picard_max_iter: 50,
            forcing: SpectralField::zeros(lmax, FieldKind::Stream),
            v0: SpectralField::zeros(lmax, FieldKind::Stream),
            spectrum: Spectrum::Paper,
            grid: None,
            dealias: true,
            nonlinear: true,
            snapshot_every: 0,
            include_coriolis_in_ou: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lmax == 0 {
            return Err(Error::Domain("lmax must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Domain(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::Domain(format!(
                "t_end must be at least dt, got t_end = {} with dt = {}",
                self.t_end, self.dt
            )));
        }
        self.n_steps()?;
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::Domain(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if !self.omega.is_finite() {
            return Err(Error::Domain("omega must be finite".into()));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.spectrum == Spectrum::RicciShifted && self.alpha == 0.0 {
            return Err(Error::Domain(
                "the ricci_shifted spectrum vanishes on l = 1; a positive alpha is required".into(),
            ));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Domain(format!(
                "picard_tol must be positive, got {}",
                self.picard_tol
            )));
        }
        if self.picard_max_iter == 0 {
            return Err(Error::Domain("picard_max_iter must be at least 1".into()));
        }
        for (name, f) in [("forcing", &self.forcing), ("v0", &self.v0)] {
            if f.lmax() != self.lmax || f.kind() != FieldKind::Stream {
                return Err(Error::Shape(format!(
                    "{name} must be a stream field with lmax {}",
                    self.lmax
                )));
            }
            if !f.is_finite() {
                return Err(Error::Domain(format!("{name} has non-finite coefficients")));
            }
        }
        Ok(())
    }

    /// `t_end / dt`, which must be a whole number.
    pub fn n_steps(&self) -> Result<u64> {
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Domain(format!(
                "t_end = {} is not a whole multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub v: SpectralField,
    pub ou: OUState,
    pub ledger: EnergyLedger,
}

/// `u = v + z`.
pub fn recombine(state: &SimState) -> SpectralField {
    state.v.add(&state.ou.z)
}

/// `F = −B(z) + αz + f`.
pub fn effective_force(
    z: &SpectralField,
    f: &SpectralField,
    alpha: f64,
    ctx: &OperatorContext,
) -> Result<SpectralField> {
    let mut out = nonlinear_b(z, ctx)?.scale(-1.0);
    out.add_assign_scaled(z, alpha);
    out.add_assign_scaled(f, 1.0);
    Ok(out)
}

/// Successive-iterate differences of one Picard solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardStats {
    /// Picard updates made before convergence was confirmed.
    pub iterations: usize,
    /// `|w_{k+1} − w_k|_V` for each evaluation of the map.
    pub diffs: Vec<f64>,
}

/// One row of `diagnostics.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub norm_h: f64,
    pub norm_v: f64,
    pub norm_da: f64,
    pub norm_l4_u: f64,
    pub int_v2: f64,
    pub int_bvvz: f64,
    pub int_fv: f64,
}

impl DiagnosticsRow {
    pub const HEADER: &'static str = "t,norm_H,norm_V,norm_DA,norm_L4_u,int_V2,int_bvvz,int_Fv";

    /// Round-trip exact CSV line.
    pub fn csv(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.t,
            self.norm_h,
            self.norm_v,
            self.norm_da,
            self.norm_l4_u,
            self.int_v2,
            self.int_bvvz,
            self.int_fv
        )
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<SimState>,
    /// Last successfully computed state.
    pub final_state: SimState,
    /// `v` and `z` at a handful of evenly spaced steps, for constant estimates.
    pub samples: Vec<SpectralField>,
    pub max_picard_iterations: usize,
}

impl Trajectory {
    fn empty(cfg: &SolverConfig) -> Self {
        let zero = SpectralField::zeros(cfg.v0.lmax(), FieldKind::Stream);
        Self {
            rows: Vec::new(),
            snapshots: Vec::new(),
            final_state: SimState {
                t: 0.0,
                step: 0,
                v: cfg.v0.clone(),
                ou: OUState {
                    t: 0.0,
                    z: zero,
                    alpha: cfg.alpha,
                    kappa: Vec::new(),
                    substep: 0,
                },
                ledger: EnergyLedger::default(),
            },
            samples: Vec::new(),
            max_picard_iterations: 0,
        }
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.final_state.ledger
    }

    pub fn energy_residual(&self, nu: f64) -> f64 {
        energy_residual(self.ledger(), nu)
    }
}

/// A run that stopped early; `partial` holds everything up to the last good state.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (last good state at t = {})",
            self.error, self.partial.final_state.t
        )
    }
}

impl std::error::Error for RunFailure {}

const SAMPLE_COUNT: u64 = 8;
const BLOW_UP_H2: f64 = 1e200;

/// Solver setup shared by all steps of one path.
#[derive(Debug)]
pub struct Solver {
    cfg: SolverConfig,
    spec: NoiseSpec,
    ctx: OperatorContext,
    gen: NoiseGenerator,
    /// `e^{−(νλ + C)Δt}` per coefficient.
    propagator: Vec<Complex64>,
}

impl Solver {
    /// Validates `cfg` and `spec`, checks noise summability at `spec.delta`
    /// and builds transforms. `path` selects the noise realization.
    pub fn new(cfg: SolverConfig, spec: NoiseSpec, path: u64) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        if !spec.sigma.is_zero() {
            let s = check_summability(&spec, spec.delta, DEFAULT_L_STAR);
            if !s.converged {
                return Err(Error::Summability(format!(
                    "sum of |sigma_l|^beta lambda_l^(beta delta) with beta = {}, delta = {} does not converge (partial sum {:.6e}, tail bound {:.3e})",
                    spec.beta, spec.delta, s.value, s.tail_bound
                )));
            }
        }
        let grid = match cfg.grid {
            Some((n_lat, n_lon)) => crate::harmonics::gauss_legendre_grid(n_lat, n_lon)?,
            None => QuadratureGrid::dealiased(cfg.lmax)?,
        };
        let ctx =
            OperatorContext::new(cfg.lmax, cfg.nu, cfg.omega, cfg.spectrum, grid, cfg.dealias)?;
        let width = cfg.dt / spec.n_substeps as f64;
        let gen = NoiseGenerator::new(&spec, cfg.lmax, path, width)?;
        let propagator = cfg
            .v0
            .modes()
            .map(|(l, m, _)| {
                let rate = Complex64::new(cfg.nu * cfg.spectrum.eigenvalue(l), 0.0)
                    + coriolis_multiplier(l, m, cfg.omega);
                (-rate * cfg.dt).exp()
            })
            .collect();
        Ok(Self {
            cfg,
            spec,
            ctx,
            gen,
            propagator,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn context(&self) -> &OperatorContext {
        &self.ctx
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn initial_state(&self) -> Result<SimState> {
        let c = &self.cfg;
        let ou_omega = if c.include_coriolis_in_ou {
            c.omega
        } else {
            0.0
        };
        let ou = OUState::zeros(c.lmax, c.nu, c.alpha, ou_omega, c.spectrum)?;
        let v = c.v0.clone();
        let ledger = EnergyLedger::new(h_norm_sq(&v), v_norm_sq(&v, c.spectrum));
        Ok(SimState {
            t: 0.0,
            step: 0,
            v,
            ou,
            ledger,
        })
    }

    fn b(&self, u: &SpectralField) -> Result<SpectralField> {
        if self.cfg.nonlinear {
            nonlinear_b(u, &self.ctx)
        } else {
            Ok(SpectralField::zeros(u.lmax(), FieldKind::Stream))
        }
    }

    /// `F = −B(z) + αz + f` (with `B = 0` in linear mode), minus `Cz` when
    /// the OU part runs without rotation.
    fn force(&self, z: &SpectralField) -> Result<SpectralField> {
        let mut out = if self.cfg.nonlinear {
            effective_force(z, &self.cfg.forcing, self.cfg.alpha, &self.ctx)?
        } else {
            let mut out = self.cfg.forcing.clone();
            out.add_assign_scaled(z, self.cfg.alpha);
            out
        };
        if !self.cfg.include_coriolis_in_ou {
            out.add_assign_scaled(&coriolis_apply(z, &self.ctx, CoriolisPath::Spectral)?, -1.0);
        }
        Ok(out)
    }

    fn rhs(&self, v: &SpectralField, z: &SpectralField) -> Result<SpectralField> {
        let mut out = self.b(&v.add(z))?.scale(-1.0);
        out.add_assign_scaled(z, self.cfg.alpha);
        out.add_assign_scaled(&self.cfg.forcing, 1.0);
        if !self.cfg.include_coriolis_in_ou {
            out.add_assign_scaled(&coriolis_apply(z, &self.ctx, CoriolisPath::Spectral)?, -1.0);
        }
        Ok(out)
    }

    fn propagate(&self, v: &SpectralField) -> SpectralField {
        let mut out = v.clone();
        for (c, e) in out.coeffs_mut().iter_mut().zip(&self.propagator) {
            *c *= e;
        }
        out
    }

    fn sample(
        &self,
        v: &SpectralField,
        z: &SpectralField,
        f: &SpectralField,
    ) -> Result<LedgerSample> {
        let sp = self.cfg.spectrum;
        Ok(LedgerSample {
            v_h2: h_norm_sq(v),
            v_v2: v_norm_sq(v, sp),
            v_da2: da_norm_sq(v, sp),
            bvvz: h_inner(&self.b(v)?, z),
            fv: h_inner(f, v),
            f_h2: h_norm_sq(f),
            z_h2: h_norm_sq(z),
            z_v2: v_norm_sq(z, sp),
        })
    }

    /// Advances the OU state and records the ledger for `v_n → v_{n+1}`.
    fn finish(&self, s: &SimState, v: SpectralField) -> Result<SimState> {
        let t_next = s.t + self.cfg.dt;
        if !v.is_finite() || h_norm_sq(&v) > BLOW_UP_H2 {
            return Err(Error::BlowUp {
                t: t_next,
                what: "v has non-finite or exploding coefficients".into(),
            });
        }
        let z = &s.ou.z;
        let f = self.force(z)?;
        let left = self.sample(&s.v, z, &f)?;
        let right = self.sample(&v, z, &f)?;
        let mut ledger = s.ledger.clone();
        ledger.record(self.cfg.dt, &left, &right);
        let ou = ou_step(&s.ou, self.cfg.dt, &self.spec, &self.gen)?;
        if !ou.z.is_finite() {
            return Err(Error::BlowUp {
                t: t_next,
                what: "z has non-finite coefficients".into(),
            });
        }
        Ok(SimState {
            t: t_next,
            step: s.step + 1,
            v,
            ou,
            ledger,
        })
    }

    /// One integrating-factor Euler or Heun step (Heun for `Picard` too).
    pub fn step_imex(&self, s: &SimState) -> Result<SimState> {
        let dt = self.cfg.dt;
        let z = &s.ou.z;
        let k1 = self.rhs(&s.v, z)?;
        let mut pred = s.v.clone();
        pred.add_assign_scaled(&k1, dt);
        let euler = self.propagate(&pred);
        let v = match self.cfg.scheme {
            Scheme::ImexEuler => euler,
            Scheme::ImexHeun | Scheme::Picard => {
                let k2 = self.rhs(&euler, z)?;
                let mut half = s.v.clone();
                half.add_assign_scaled(&k1, 0.5 * dt);
                let mut v = self.propagate(&half);
                v.add_assign_scaled(&k2, 0.5 * dt);
                v
            }
        };
        self.finish(s, v)
    }

    /// Fixed point of the trapezoidal mild map
    /// `Γw = e^{−LΔt}(v_n + Δt/2 N(v_n)) + Δt/2 N(w)`, started from the Euler predictor.
    pub fn step_picard(&self, s: &SimState) -> Result<(SimState, PicardStats)> {
        let dt = self.cfg.dt;
        let z = &s.ou.z;
        let k1 = self.rhs(&s.v, z)?;
        let mut pred = s.v.clone();
        pred.add_assign_scaled(&k1, dt);
        let mut w = self.propagate(&pred);
        let mut half = s.v.clone();
        half.add_assign_scaled(&k1, 0.5 * dt);
        let base = self.propagate(&half);
        let mut diffs = Vec::new();
        for k in 0..=self.cfg.picard_max_iter {
            let mut next = base.clone();
            next.add_assign_scaled(&self.rhs(&w, z)?, 0.5 * dt);
            let d = v_norm_sq(&next.sub(&w), self.cfg.spectrum).sqrt();
            diffs.push(d);
            w = next;
            if !d.is_finite() {
                break;
            }
            if d < self.cfg.picard_tol {
                let state = self.finish(s, w)?;
                return Ok((
                    state,
                    PicardStats {
                        iterations: k,
                        diffs,
                    },
                ));
            }
        }
        Err(Error::ContractionFailure {
            t: s.t,
            iterations: diffs.len(),
            last_diff: diffs.last().copied().unwrap_or(f64::NAN),
        })
    }

    /// Dispatches on the configured scheme.
    pub fn step(&self, s: &SimState) -> Result<(SimState, Option<PicardStats>)> {
        match self.cfg.scheme {
            Scheme::Picard => self.step_picard(s).map(|(st, p)| (st, Some(p))),
            _ => self.step_imex(s).map(|st| (st, None)),
        }
    }

    fn row(&self, s: &SimState) -> Result<DiagnosticsRow> {
        let sp = self.cfg.spectrum;
        let u = recombine(s);
        Ok(DiagnosticsRow {
            t: s.t,
            norm_h: h_norm_sq(&s.v).sqrt(),
            norm_v: v_norm_sq(&s.v, sp).sqrt(),
            norm_da: da_norm_sq(&s.v, sp).sqrt(),
            norm_l4_u: l4_norm(&u, &self.ctx)?,
            int_v2: s.ledger.int_v2,
            int_bvvz: s.ledger.int_bvvz,
            int_fv: s.ledger.int_fv,
        })
    }

    /// Integrates to `t_end`, recording a diagnostics row at every step.
    pub fn run(&self) -> std::result::Result<Trajectory, Box<RunFailure>> {
        let init = self.initial_state().map_err(|error| {
            Box::new(RunFailure {
                error,
                partial: Trajectory::empty(&self.cfg),
            })
        })?;
        let n = self.cfg.n_steps().expect("validated");
        let sample_every = (n / SAMPLE_COUNT).max(1);
        let mut traj = Trajectory {
            rows: Vec::with_capacity(n as usize + 1),
            snapshots: Vec::new(),
            final_state: init,
            samples: Vec::new(),
            max_picard_iterations: 0,
        };
        let fail = |error: Error, traj: Trajectory| {
            Box::new(RunFailure {
                error,
                partial: traj,
            })
        };
        match self.row(&traj.final_state) {
            Ok(r) => traj.rows.push(r),
            Err(e) => return Err(fail(e, traj)),
        }
        self.observe(&mut traj, sample_every, n);
        for _ in 0..n {
            match self.step(&traj.final_state) {
                Ok((next, picard)) => {
                    if let Some(p) = picard {
                        traj.max_picard_iterations = traj.max_picard_iterations.max(p.iterations);
                    }
                    traj.final_state = next;
                }
                Err(e) => return Err(fail(e, traj)),
            }
            match self.row(&traj.final_state) {
                Ok(r) => traj.rows.push(r),
                Err(e) => return Err(fail(e, traj)),
            }
            self.observe(&mut traj, sample_every, n);
        }
        Ok(traj)
    }

    fn observe(&self, traj: &mut Trajectory, sample_every: u64, n: u64) {
        let s = &traj.final_state;
        if self.cfg.snapshot_every > 0 && s.step.is_multiple_of(self.cfg.snapshot_every) {
            traj.snapshots.push(s.clone());
        }
        if s.step.is_multiple_of(sample_every) || s.step == n {
            for f in [&s.v, &s.ou.z] {
                if h_norm_sq(f) > 0.0 {
                    traj.samples.push(f.clone());
                }
            }
        }
    }
}

/// Builds a [`Solver`] for noise path `path` and integrates it.
pub fn run(
    cfg: SolverConfig,
    spec: NoiseSpec,
    path: u64,
) -> std::result::Result<Trajectory, Box<RunFailure>> {
    let solver = Solver::new(cfg.clone(), spec, path).map_err(|error| {
        Box::new(RunFailure {
            error,
            partial: Trajectory::empty(&cfg),
        })
    })?;
    solver.run()
}
