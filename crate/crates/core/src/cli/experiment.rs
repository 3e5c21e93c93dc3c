use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::snapshot::{write_snapshot, Snapshot};
use super::Mode;
use crate::diagnostics::{
    empirical_b_constant, gronwall_bound_report, h_norm_sq, inequality_report,
    write_inequality_csv, GronwallReport,
};
use crate::error::Result;
use crate::harmonics::{gauss_legendre_grid, FieldKind, QuadratureGrid, SpectralField};
use crate::noise::{
    check_summability, moment_scaling_estimate, sample_positive_stable, substep_rng, Purpose,
    DEFAULT_L_STAR,
};
use crate::operators::{
    coriolis_apply, curl_scalar, h_inner, nonlinear_b, trilinear_b, CoriolisPath, OperatorContext,
};
use crate::ou::{gaussian_second_moment, ou_moment_check, ou_norm_samples, zlp_bound, OuEnsemble};
use crate::solver::{DiagnosticsRow, Solver, Trajectory};
use crate::stats::{loglog_slope, mean};

/// What a finished experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    /// One-line summary for the terminal.
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Check {
    name: String,
    value: f64,
    limit: f64,
    passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }
}

fn render_checks(out: &mut String, checks: &[Check]) {
    for c in checks {
        let _ = writeln!(
            out,
            "  {:<44} {:>13.6e}  limit {:>11.4e}  {}",
            c.name,
            c.value,
            c.limit,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
}

fn header(cfg: &ExperimentConfig) -> String {
    let s = &cfg.solver;
    let n = &cfg.noise;
    let mut out = String::new();
    let _ = writeln!(out, "mode: {}", cfg.mode);
    let _ = writeln!(out, "seed: {}", cfg.seed);
    let _ = writeln!(
        out,
        "lmax: {}  grid: {}  dealias: {}  spectrum: {:?}",
        s.lmax,
        s.grid
            .map(|(a, b)| format!("{a}x{b}"))
            .unwrap_or_else(|| "2/3-rule".into()),
        s.dealias,
        s.spectrum
    );
    let _ = writeln!(
        out,
        "dt: {}  t_end: {}  scheme: {}  nu: {}  omega: {}  alpha: {}",
        s.dt, s.t_end, s.scheme, s.nu, s.omega, s.alpha
    );
    let _ = writeln!(
        out,
        "noise: beta = {}  sigma = {}  delta = {}  n_substeps = {}",
        n.beta, n.sigma, n.delta, n.n_substeps
    );
    out
}

fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", DiagnosticsRow::HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.csv())?;
    }
    w.flush()?;
    Ok(())
}

fn write_snapshot_file(path: &Path, snap: &Snapshot) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(snap, &mut w)?;
    w.flush()?;
    Ok(())
}

fn context(cfg: &ExperimentConfig) -> Result<OperatorContext> {
    let s = &cfg.solver;
    let grid = match s.grid {
        Some((a, b)) => gauss_legendre_grid(a, b)?,
        None => QuadratureGrid::dealiased(s.lmax)?,
    };
    OperatorContext::new(s.lmax, s.nu, s.omega, s.spectrum, grid, s.dealias)
}

fn render_gronwall(out: &mut String, g: &GronwallReport) {
    let flag = |ok: bool| if ok { "ok" } else { "VIOLATED" };
    let _ = writeln!(
        out,
        "a-priori bounds (eps = {} for K1/K2, {} for K3/K4; empirical b constant {:.6e}, C(eps) = {:.6e}):",
        g.eps_k12, g.eps_k34, g.c_b, g.c_eps
    );
    let _ = writeln!(
        out,
        "  int |v|_V^2   = {:.6e} <= K1 = {:.6e}  {}",
        g.int_v2,
        g.k1,
        flag(g.k1_ok)
    );
    let _ = writeln!(
        out,
        "  sup |v|^2     = {:.6e} <= K2 = {:.6e}  {}",
        g.sup_v_h2,
        g.k2,
        flag(g.k2_ok)
    );
    let _ = writeln!(
        out,
        "  sup |v|_V^2   = {:.6e} <= K3 = {:.6e}  {}",
        g.sup_v_v2,
        g.k3,
        flag(g.k3_ok)
    );
    let _ = writeln!(
        out,
        "  int |Av|^2    = {:.6e} <= K4 = {:.6e}  {}",
        g.int_av2,
        g.k4,
        flag(g.k4_ok)
    );
}

fn gronwall_for(traj: &Trajectory, solver: &Solver) -> Result<GronwallReport> {
    let c_b = if traj.samples.is_empty() {
        0.0
    } else {
        empirical_b_constant(&traj.samples, solver.context())?
    };
    Ok(gronwall_bound_report(
        traj.ledger(),
        solver.config().nu,
        c_b,
    ))
}

/// Runs the configured mode, writing artifacts into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.output_dir)?;
    let mut report = header(cfg);
    report.push('\n');
    let mut files = Vec::new();
    let result = match cfg.mode {
        Mode::Simulate => simulate(cfg, &mut report, &mut files),
        Mode::VerifyOperators => verify_operators(cfg, &mut report, &mut files),
        Mode::VerifyNoise => verify_noise(cfg, &mut report),
        Mode::VerifyOu => verify_ou(cfg, &mut report),
        Mode::VerifyEnergy => verify_energy(cfg, &mut report),
    };
    let report_path = cfg.output_dir.join("report.txt");
    let passed = match &result {
        Ok(p) => *p,
        Err(e) => {
            let _ = writeln!(report, "\nerror: {e}");
            false
        }
    };
    let _ = writeln!(
        report,
        "\nstatus: {}",
        match (&result, passed) {
            (Err(_), _) => "ERROR",
            (_, true) => "PASS",
            _ => "FAIL",
        }
    );
    fs::write(&report_path, &report)?;
    files.push(report_path);
    result?;
    Ok(Outcome {
        passed,
        summary: format!(
            "{}: {} ({})",
            cfg.mode,
            if passed { "PASS" } else { "FAIL" },
            cfg.output_dir.join("report.txt").display()
        ),
        files,
    })
}

fn simulate(cfg: &ExperimentConfig, report: &mut String, files: &mut Vec<PathBuf>) -> Result<bool> {
    let solver = Solver::new(cfg.solver.clone(), cfg.noise.clone(), 0)?;
    let dir = &cfg.output_dir;
    let spectrum = cfg.solver.spectrum;
    let diag_path = dir.join("diagnostics.csv");
    let traj = match solver.run() {
        Ok(t) => t,
        Err(fail) => {
            write_diagnostics(&diag_path, &fail.partial.rows)?;
            files.push(diag_path);
            let last = dir.join("snapshot_last_good.sns");
            write_snapshot_file(&last, &Snapshot::of(&fail.partial.final_state, spectrum))?;
            files.push(last);
            return Err(fail.error);
        }
    };
    write_diagnostics(&diag_path, &traj.rows)?;
    files.push(diag_path);
    for s in &traj.snapshots {
        let p = dir.join(format!("snapshot_{:08}.sns", s.step));
        write_snapshot_file(&p, &Snapshot::of(s, spectrum))?;
        files.push(p);
    }

    let last = traj.rows.last().expect("at least the initial row");
    let residual = traj.energy_residual(cfg.solver.nu);
    let _ = writeln!(report, "steps: {}", traj.final_state.step);
    let _ = writeln!(
        report,
        "final: |v|_H = {:.6e}  |v|_V = {:.6e}  |Av| = {:.6e}  |u|_L4 = {:.6e}",
        last.norm_h, last.norm_v, last.norm_da, last.norm_l4_u
    );
    let _ = writeln!(report, "energy residual: {residual:.6e}");
    if cfg.solver.scheme == crate::solver::Scheme::Picard {
        let _ = writeln!(
            report,
            "max Picard iterations: {}",
            traj.max_picard_iterations
        );
    }
    if !traj.samples.is_empty() {
        let ineq = inequality_report(&traj.samples, solver.context())?;
        let p = dir.join("inequalities.csv");
        let mut w = BufWriter::new(File::create(&p)?);
        write_inequality_csv(&ineq, &mut w)?;
        w.flush()?;
        files.push(p);
    }
    render_gronwall(report, &gronwall_for(&traj, &solver)?);

    let n_paths = cfg.n_paths.unwrap_or(1);
    if n_paths > 1 {
        let rows: Vec<String> = (0..n_paths as u64)
            .into_par_iter()
            .map(|path| -> Result<String> {
                let t = if path == 0 {
                    traj.clone()
                } else {
                    Solver::new(cfg.solver.clone(), cfg.noise.clone(), path)?
                        .run()
                        .map_err(|f| f.error)?
                };
                let l = t.ledger();
                let r = t.rows.last().expect("nonempty");
                Ok(format!(
                    "{path},{:?},{:?},{:?},{:?},{:?}",
                    r.norm_h,
                    r.norm_v,
                    l.sup_v_v2,
                    l.int_av2,
                    t.energy_residual(cfg.solver.nu)
                ))
            })
            .collect::<Result<_>>()?;
        let p = dir.join("ensemble.csv");
        let mut w = BufWriter::new(File::create(&p)?);
        writeln!(w, "path,norm_H,norm_V,sup_V2,int_Av2,energy_residual")?;
        for r in rows {
            writeln!(w, "{r}")?;
        }
        w.flush()?;
        files.push(p);
        let _ = writeln!(report, "ensemble: {n_paths} paths written to ensemble.csv");
    }
    Ok(true)
}

fn verify_operators(
    cfg: &ExperimentConfig,
    report: &mut String,
    files: &mut Vec<PathBuf>,
) -> Result<bool> {
    let ctx = context(cfg)?;
    let lmax = cfg.solver.lmax;
    let n = cfg.n_paths.unwrap_or(20);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<SpectralField> = (0..n)
        .map(|_| SpectralField::random(lmax, FieldKind::Stream, &mut rng, |l| 1.0 / l as f64))
        .collect();
    let t = ctx.transform();
    let low = (lmax / 2).max(1);
    let per: Vec<[f64; 4]> = samples
        .par_iter()
        .enumerate()
        .map(|(i, u)| -> Result<[f64; 4]> {
            let back = t.vector_analysis(&t.vector_synthesis(u)?)?;
            let round = back.max_abs_diff(u);
            let g = t.vector_synthesis(u)?;
            let quad = t.grid().integrate(&g.dot(&g));
            let parseval = (quad - h_norm_sq(u)).abs() / h_norm_sq(u);
            let w = samples[(i + 1) % samples.len()]
                .with_lmax(low)
                .with_lmax(lmax);
            let direct = trilinear_b(u, u, &w, &ctx)?;
            let spectral = h_inner(&nonlinear_b(u, &ctx)?, &w);
            let bform = (direct - spectral).abs() / direct.abs().max(1e-300);
            let cg = coriolis_apply(u, &ctx, CoriolisPath::Grid)?;
            let cs = coriolis_apply(u, &ctx, CoriolisPath::Spectral)?;
            let cpath = cg.max_abs_diff(&cs) / cs.max_abs().max(1.0);
            Ok([round, parseval, bform, cpath])
        })
        .collect::<Result<_>>()?;
    let worst = |k: usize| per.iter().map(|r| r[k]).fold(0.0, f64::max);

    let mut eig = 0.0f64;
    let mut unit = 0.0f64;
    for l in 1..=lmax {
        for m in 0..=l {
            let z = SpectralField::basis_mode(lmax, l, m)?;
            let zeta = t.curl_analysis(&t.vector_synthesis(&z)?)?;
            eig = eig.max(zeta.max_abs_diff(&curl_scalar(&z)) / (l * (l + 1)) as f64);
            let g = t.vector_synthesis(&z)?;
            unit = unit.max((t.grid().integrate(&g.dot(&g)).sqrt() - 1.0).abs());
        }
    }

    let ineq = inequality_report(&samples, &ctx)?;
    let p = cfg.output_dir.join("inequalities.csv");
    let mut w = BufWriter::new(File::create(&p)?);
    write_inequality_csv(&ineq, &mut w)?;
    w.flush()?;
    files.push(p);
    let entry = |name: &str| ineq.get(name).map(|e| e.ratio).unwrap_or(f64::NAN);

    let checks = [
        Check::below("transform round trip (max abs)", worst(0), 1e-10),
        Check::below("Parseval (relative)", worst(1), 1e-9),
        Check::below("eigenrelation curl Curl Z = l(l+1) Z", eig, 1e-10),
        Check::below("|Z_lm|_H - 1 by quadrature", unit, 1e-9),
        Check::below("vorticity-form B vs trilinear b (relative)", worst(2), 1e-8),
        Check::below("Coriolis grid vs spectral path", worst(3), 1e-8),
        Check::below("b(u,w,w) and b(u,v,w) + b(u,w,v)", entry("b_antisym"), 1e-9),
        Check::below("(Cu,u) and (Cu,Au)", entry("coriolis_zero"), 1e-10),
        Check::below("Poincare ratio 2|u|^2 / |u|_V^2", entry("poincare"), 1.0),
    ];
    let _ = writeln!(report, "operator checks on {n} random fields:");
    render_checks(report, &checks);
    let _ = writeln!(
        report,
        "empirical inequality constants (max ratio over samples):"
    );
    for name in ["ladyzhenskaya", "b1", "b2", "b5"] {
        let _ = writeln!(report, "  {name:<14} {:.6e}", entry(name));
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn verify_noise(cfg: &ExperimentConfig, report: &mut String) -> Result<bool> {
    let spec = &cfg.noise;
    let n = cfg.n_paths.unwrap_or(10_000);
    let a = spec.subordinator_index();
    let dt = cfg.solver.dt;
    let xs: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = substep_rng(spec.seed, k, Purpose::Subordinator, u64::MAX);
            sample_positive_stable(a, dt, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    if spec.beta == 2.0 {
        let dev = xs.iter().map(|x| (x - dt).abs()).fold(0.0, f64::max);
        checks.push(Check::below(
            "beta = 2: subordinator increment equals dt",
            dev,
            0.0,
        ));
    } else {
        for r in [0.5, 1.0, 2.0] {
            let vals: Vec<f64> = xs.iter().map(|x| (-r * x).exp()).collect();
            let m = mean(&vals);
            let exact = (-dt * f64::powf(r, a)).exp();
            let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
            let tol = 0.01f64.max(4.0 * (var / n as f64).sqrt() / exact);
            checks.push(Check::below(
                format!("Laplace transform at r = {r} (relative)"),
                (m / exact - 1.0).abs(),
                tol,
            ));
        }
    }
    let pts = moment_scaling_estimate(spec, cfg.solver.lmax, spec.delta, cfg.p, &cfg.times, n)?;
    if pts.len() >= 2 && !spec.sigma.is_zero() {
        let slope = loglog_slope(&pts);
        let _ = writeln!(
            report,
            "moment scaling E|A^delta G L(t)|^p at p = {}:",
            cfg.p
        );
        for (t, m) in &pts {
            let _ = writeln!(report, "  t = {t:<8} {m:.6e}");
        }
        checks.push(Check::below(
            format!(
                "log-log slope {slope:.4} vs p/beta = {:.4}",
                cfg.p / spec.beta
            ),
            (slope - cfg.p / spec.beta).abs(),
            0.05,
        ));
    }
    let s = check_summability(spec, spec.delta, DEFAULT_L_STAR);
    let _ = writeln!(
        report,
        "summability at delta = {}: sum = {:.6e}, tail bound = {:.3e}, converged = {} (with multiplicity 2l+1: {:.6e}, converged = {})",
        spec.delta, s.value, s.tail_bound, s.converged, s.weighted_value, s.weighted_converged
    );
    let _ = writeln!(report, "noise checks ({n} samples):");
    render_checks(report, &checks);
    Ok(checks.iter().all(|c| c.passed))
}

fn verify_ou(cfg: &ExperimentConfig, report: &mut String) -> Result<bool> {
    let spec = &cfg.noise;
    let s = &cfg.solver;
    let n = cfg.n_paths.unwrap_or(10_000);
    let ens = OuEnsemble {
        lmax: s.lmax,
        nu: s.nu,
        alpha: s.alpha,
        n_paths: n,
        width: s.dt / spec.n_substeps as f64,
    };
    let mut checks = Vec::new();
    for &t in &cfg.times {
        if spec.beta == 2.0 {
            let emp = mean(&ou_norm_samples(spec, &ens, t, 2.0)?);
            let exact = gaussian_second_moment(spec, s.nu, s.alpha, t, s.lmax);
            checks.push(Check::below(
                format!("t = {t}: E|z|^2 = {emp:.5e} vs {exact:.5e}"),
                (emp / exact - 1.0).abs(),
                0.03,
            ));
        } else {
            let m = ou_moment_check(spec, &ens, cfg.p, t)?;
            checks.push(Check::below(
                format!("t = {t}: E|z|^p / (c_p * bound)"),
                m.ratio,
                1.0,
            ));
        }
    }
    let t_last = cfg.times.iter().cloned().fold(0.0, f64::max);
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    let exprs: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            zlp_bound(t_last, cfg.p.min(spec.beta * 0.999), spec, s.nu, a, s.lmax)
                .map(|z| z.expression)
        })
        .collect::<Result<_>>()?;
    let _ = writeln!(report, "moment expression at t = {t_last} against alpha:");
    for (a, e) in alphas.iter().zip(&exprs) {
        let _ = writeln!(report, "  alpha = {a:<8} {e:.6e}");
    }
    let increase = exprs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    if exprs.len() >= 2 {
        checks.push(Check::below(
            "largest increase of the expression in alpha",
            increase,
            0.0,
        ));
    }
    let _ = writeln!(report, "OU checks ({n} paths, substep {}):", ens.width);
    render_checks(report, &checks);
    Ok(checks.iter().all(|c| c.passed))
}

fn verify_energy(cfg: &ExperimentConfig, report: &mut String) -> Result<bool> {
    const LEVELS: u32 = 4;
    let base = cfg.solver.dt;
    let finest_sub = cfg.noise.n_substeps;
    let mut residuals = Vec::new();
    let mut finest = None;
    for k in 0..LEVELS {
        let mut sc = cfg.solver.clone();
        sc.dt = base / f64::from(1u32 << k);
        sc.snapshot_every = 0;
        let mut spec = cfg.noise.clone();
        // Same base noise width at every level, so all runs share one path.
        spec.n_substeps = finest_sub * (1 << (LEVELS - 1 - k));
        let solver = Solver::new(sc, spec, 0)?;
        let traj = solver.run().map_err(|f| f.error)?;
        let r = traj.energy_residual(cfg.solver.nu);
        let _ = writeln!(
            report,
            "dt = {:<12} energy residual = {r:.6e}",
            solver.config().dt
        );
        residuals.push(r.abs());
        if k == LEVELS - 1 {
            finest = Some((gronwall_for(&traj, &solver)?, traj.ledger().clone()));
        }
    }
    let mut checks = Vec::new();
    for (i, w) in residuals.windows(2).enumerate() {
        let converged = w[0] < 1e-13;
        let ratio = if converged {
            f64::INFINITY
        } else {
            w[0] / w[1]
        };
        checks.push(Check::above(
            format!("residual reduction at halving {}", i + 1),
            ratio,
            1.7,
        ));
    }
    let (g, _) = finest.expect("LEVELS > 0");
    render_gronwall(report, &g);
    if cfg.noise.sigma.is_zero() {
        checks.push(Check::above("K1 - int |v|_V^2", g.k1 - g.int_v2, 0.0));
        checks.push(Check::above("K2 - sup |v|^2", g.k2 - g.sup_v_h2, 0.0));
    }
    let _ = writeln!(report, "energy checks:");
    render_checks(report, &checks);
    Ok(checks.iter().all(|c| c.passed))
}
