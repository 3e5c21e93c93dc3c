//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snse::diagnostics::{gronwall_bound_report, EPS_K12};
use snse::harmonics::{FieldKind, SpectralField};
use snse::noise::{
    check_summability, moment_scaling_estimate, sample_positive_stable, NoiseSpec, SigmaRule,
    DEFAULT_L_STAR,
};
use snse::operators::{
    coriolis_apply, nonlinear_b, trilinear_b, CoriolisPath, OperatorContext, Spectrum,
};
use snse::ou::{c_tilde, ou_moment_check, ou_norm_samples, zlp_bound, OuEnsemble};
use snse::solver::{Scheme, Solver, SolverConfig, Trajectory};

type Check = Result<String, String>;
type Criterion = (&'static str, f64, fn() -> Check);

fn lam(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

/// `(a, b)_H` computed straight from the coefficient layout.
fn h_ip(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut s = 0.0;
    for l in 1..=a.lmax() {
        for m in 0..=l {
            let w = if m == 0 { 1.0 } else { 2.0 };
            s += lam(l) * w * (a.get(l, m) * b.get(l, m).conj()).re;
        }
    }
    s
}

fn apply_a(u: &SpectralField) -> SpectralField {
    u.map_modes(|l, _| Complex64::new(lam(l), 0.0))
}

fn random_fields(lmax: usize, n: usize, seed: u64) -> Vec<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| SpectralField::random(lmax, FieldKind::Stream, &mut rng, |l| 1.0 / l as f64))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn operator_identities() -> Check {
    let lmax = 15;
    let ctx =
        OperatorContext::dealiased(lmax, 1.0, 1.3, Spectrum::Paper).map_err(|e| e.to_string())?;
    let f = random_fields(lmax, 100, 1);
    let (mut skew, mut anti, mut cor, mut cor_a, mut poinc) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..f.len() {
        let (v, w, z) = (&f[i], &f[(i + 1) % f.len()], &f[(i + 2) % f.len()]);
        let b = |a: &SpectralField, b: &SpectralField, c: &SpectralField| {
            trilinear_b(a, b, c, &ctx).unwrap()
        };
        skew = skew.max(b(v, w, w).abs());
        anti = anti.max((b(v, z, w) + b(v, w, z)).abs());
        let cu = coriolis_apply(v, &ctx, CoriolisPath::Grid).map_err(|e| e.to_string())?;
        cor = cor.max(h_ip(&cu, v).abs());
        cor_a = cor_a.max(h_ip(&cu, &apply_a(v)).abs());
        poinc = poinc.min(h_ip(&apply_a(v), v) / (2.0 * h_ip(v, v)));
    }
    verdict(
        skew < 1e-9 && anti < 1e-9 && cor < 1e-10 && cor_a < 1e-10 && poinc >= 1.0,
        format!(
            "max |b(v,w,w)| {skew:.2e}, |b(v,z,w)+b(v,w,z)| {anti:.2e}, |(Cu,u)| {cor:.2e}, |(Cu,Au)| {cor_a:.2e}, min |u|_V^2/(2|u|^2) {poinc:.3}"
        ),
    )
}

fn basis_and_spectrum() -> Check {
    let lmax = 15;
    let ctx =
        OperatorContext::dealiased(lmax, 1.0, 0.0, Spectrum::Paper).map_err(|e| e.to_string())?;
    let t = ctx.transform();
    let (mut eig, mut unit) = (0.0f64, 0.0f64);
    for l in 1..=lmax {
        for m in 0..=l {
            let z = SpectralField::basis_mode(lmax, l, m).map_err(|e| e.to_string())?;
            let u = t.vector_synthesis(&z).map_err(|e| e.to_string())?;
            // The curl of Curl ψ is -Δψ, the stream function of A Z.
            let az = t
                .curl_analysis(&u)
                .map_err(|e| e.to_string())?
                .with_kind(FieldKind::Stream);
            let diff = az.sub(&z.scale(lam(l)));
            eig = eig.max(h_ip(&diff, &diff).sqrt());
            unit = unit.max((t.grid().integrate(&u.dot(&u)).sqrt() - 1.0).abs());
        }
    }
    let mut round = 0.0f64;
    for u in random_fields(lmax, 20, 2) {
        let back = t
            .vector_analysis(&t.vector_synthesis(&u).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        round = round.max(back.max_abs_diff(&u));
        let s = u.with_kind(FieldKind::Scalar);
        let back = t
            .scalar_analysis(&t.scalar_synthesis(&s).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        round = round.max(back.max_abs_diff(&s));
    }
    verdict(
        eig < 1e-10 && unit < 1e-9 && round < 1e-10,
        format!("|A Z - l(l+1) Z|_H {eig:.2e}, ||Z|_H - 1| {unit:.2e}, round trip {round:.2e}"),
    )
}

fn single_mode_decay() -> Check {
    let exact = (-2.0f64).exp();
    let mut worst = 0.0f64;
    for scheme in [Scheme::ImexEuler, Scheme::ImexHeun, Scheme::Picard] {
        for dt in [0.1, 0.05, 0.025, 0.01, 0.002] {
            let mut cfg = SolverConfig::new(8, dt, 1.0);
            cfg.scheme = scheme;
            cfg.v0 = SpectralField::basis_mode(8, 1, 0).unwrap();
            let traj = Solver::new(cfg, NoiseSpec::zero(0), 0)
                .and_then(|s| s.run().map_err(|f| f.error))
                .map_err(|e| e.to_string())?;
            let v = &traj.final_state.v;
            worst = worst.max((h_ip(v, v).sqrt() / exact - 1.0).abs());
        }
    }
    verdict(
        worst < 1e-8,
        format!("max relative error of |v(1)|_H against e^-2: {worst:.2e}"),
    )
}

fn nonlinear_oracle() -> Check {
    let lmax = 10;
    let ctx =
        OperatorContext::dealiased(lmax, 1.0, 0.0, Spectrum::Paper).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for u in random_fields(lmax, 5, 4) {
        let bu = nonlinear_b(&u, &ctx).map_err(|e| e.to_string())?;
        for l in 1..=5 {
            for m in 0..=l {
                for phase in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                    if m == 0 && phase.im != 0.0 {
                        continue;
                    }
                    let w =
                        SpectralField::single_mode(lmax, FieldKind::Stream, l, m, phase).unwrap();
                    let direct = trilinear_b(&u, &u, &w, &ctx).map_err(|e| e.to_string())?;
                    worst = worst.max((h_ip(&bu, &w) - direct).abs());
                    count += 1;
                }
            }
        }
    }
    verdict(
        worst < 1e-8,
        format!("max |(B(u),w) - b(u,u,w)| over {count} pairs: {worst:.2e}"),
    )
}

fn subordinator_law() -> Check {
    let n = 100_000;
    let dt = 1.0;
    let mut worst = 0.0f64;
    for (k, beta) in [1.2f64, 1.5, 1.8].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(50 + k as u64);
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_positive_stable(beta / 2.0, dt, &mut rng))
            .collect::<snse::Result<_>>()
            .map_err(|e| e.to_string())?;
        for r in [0.5f64, 1.0, 2.0] {
            let emp = mean(&xs.iter().map(|x| (-r * x).exp()).collect::<Vec<_>>());
            worst = worst.max((emp / (-dt * r.powf(beta / 2.0)).exp() - 1.0).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gauss = (0..1000).all(|_| sample_positive_stable(1.0, 0.37, &mut rng).unwrap() == 0.37);
    verdict(
        worst < 0.01 && gauss,
        format!("max relative Laplace-transform error {worst:.2e}; beta = 2 gives dX = dt exactly: {gauss}"),
    )
}

fn stable_moment_scaling() -> Check {
    let (beta, p) = (1.5, 1.0);
    let spec = NoiseSpec::new(
        beta,
        SigmaRule::Band {
            lmax: 1,
            value: 1.0,
        },
        0.0,
        21,
        1,
    )
    .map_err(|e| e.to_string())?;
    let pts = moment_scaling_estimate(&spec, 1, 0.0, p, &[0.1, 1.0, 10.0], 10_000)
        .map_err(|e| e.to_string())?;
    let s = slope(&pts);
    verdict(
        (s - p / beta).abs() <= 0.05,
        format!("log-log slope {s:.4} against p/beta = {:.4}", p / beta),
    )
}

fn ou_moment_bound() -> Check {
    let times = [0.1, 1.0, 10.0];
    let ens = OuEnsemble {
        lmax: 3,
        nu: 1.0,
        alpha: 0.0,
        n_paths: 10_000,
        width: 0.005,
    };
    let band = SigmaRule::Band {
        lmax: 3,
        value: 1.0,
    };
    let gauss = NoiseSpec::new(2.0, band.clone(), 0.0, 31, 1).map_err(|e| e.to_string())?;
    let fine = OuEnsemble {
        width: 0.002,
        ..ens
    };
    let mut g_err = 0.0f64;
    for &t in &times {
        let emp = mean(&ou_norm_samples(&gauss, &fine, t, 2.0).map_err(|e| e.to_string())?);
        let exact: f64 = (1..=3)
            .map(|l| {
                let k = lam(l);
                (2 * l + 1) as f64 * (1.0 - (-2.0 * k * t).exp()) / (2.0 * k)
            })
            .sum();
        g_err = g_err.max((emp / exact - 1.0).abs());
    }
    // A Gaussian coordinate has E|X|^p = 2^{p/2} Γ((1+p)/2)/√π · (E X²)^{p/2}.
    let gamma = libm::tgamma;
    let gauss_c = 2f64.powf(0.5) * gamma(1.0) / std::f64::consts::PI.sqrt();
    let cal = (c_tilde(2.0 - 1e-12, 1.0) / gauss_c - 1.0).abs();

    let stable = NoiseSpec::new(1.5, band, 0.0, 32, 1).map_err(|e| e.to_string())?;
    let mut worst_ratio = 0.0f64;
    for &t in &times {
        let m = ou_moment_check(&stable, &ens, 1.0, t).map_err(|e| e.to_string())?;
        worst_ratio = worst_ratio.max(m.ratio);
    }
    let exprs: Vec<f64> = [0.0, 1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&a| zlp_bound(10.0, 1.0, &stable, 1.0, a, 3).map(|z| z.expression))
        .collect::<snse::Result<_>>()
        .map_err(|e| e.to_string())?;
    let decreasing = exprs.windows(2).all(|w| w[1] < w[0]);
    let shrink = exprs[exprs.len() - 1] / exprs[0];
    verdict(
        g_err < 0.03 && cal < 1e-6 && worst_ratio <= 1.0 && decreasing,
        format!(
            "Gaussian E|z|^2 error {:.2}%, calibration at beta -> 2 {cal:.1e}, max E|z|^p/(c_p x bound) {worst_ratio:.3}, expression decreasing in alpha {decreasing} (alpha = 1000 / alpha = 0: {shrink:.2e})",
            100.0 * g_err
        ),
    )
}

fn residual_from_rows(traj: &Trajectory, nu: f64) -> f64 {
    let (a, b) = (&traj.rows[0], traj.rows.last().unwrap());
    b.norm_h.powi(2) - a.norm_h.powi(2) + 2.0 * nu * b.int_v2 - 2.0 * b.int_bvvz - 2.0 * b.int_fv
}

fn energy_base(lmax: usize, dt: f64, t_end: f64) -> SolverConfig {
    let mut cfg = SolverConfig::new(lmax, dt, t_end);
    cfg.omega = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    cfg.v0 = SpectralField::random(lmax, FieldKind::Stream, &mut rng, |l| 0.5 / (l * l) as f64);
    cfg
}

fn energy_identity() -> Check {
    let levels = 4;
    let mut res = Vec::new();
    for k in 0..levels {
        let dt = 0.02 / f64::from(1u32 << k);
        let spec = NoiseSpec::new(
            1.5,
            SigmaRule::Power { gamma: 2.0 },
            0.0,
            8,
            1 << (levels - 1 - k),
        )
        .map_err(|e| e.to_string())?;
        let traj = Solver::new(energy_base(12, dt, 1.0), spec, 0)
            .and_then(|s| s.run().map_err(|f| f.error))
            .map_err(|e| e.to_string())?;
        let r = residual_from_rows(&traj, 1.0);
        if (r - traj.energy_residual(1.0)).abs() > 1e-9 * r.abs().max(1e-12) {
            return Err(format!(
                "diagnostics rows disagree with the ledger residual at dt = {dt}"
            ));
        }
        res.push(r.abs());
    }
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();

    // Noise-free run with forcing: running quantities against K1 and K2 at every step.
    let mut cfg = energy_base(12, 0.01, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    cfg.forcing = SpectralField::random(12, FieldKind::Stream, &mut rng, |l| 1.0 / (l * l) as f64);
    let solver = Solver::new(cfg, NoiseSpec::zero(0), 0).map_err(|e| e.to_string())?;
    let mut s = solver.initial_state().map_err(|e| e.to_string())?;
    let eps = EPS_K12;
    let mut margin = f64::INFINITY;
    for _ in 0..solver.config().n_steps().unwrap() {
        s = solver.step(&s).map_err(|e| e.to_string())?.0;
        let l = &s.ledger;
        let k1 =
            (l.v0_h2 + 2.0 / eps * l.int_vh2_zv2 + 2.0 / eps * l.int_f2 + eps / 2.0 * l.int_vh2)
                / (2.0 - eps / 2.0);
        let k2 = (2.0 - eps / 2.0) * k1;
        let rep = gronwall_bound_report(l, 1.0, 0.0);
        if (rep.k1 - k1).abs() > 1e-12 * k1 {
            return Err(format!(
                "K1 report {} differs from the direct formula {k1}",
                rep.k1
            ));
        }
        margin = margin.min((k1 - l.int_v2) / k1).min((k2 - l.sup_v_h2) / k2);
    }
    verdict(
        ratios.iter().all(|&r| r >= 1.7) && margin >= 0.0,
        format!(
            "residual at dt = 0.02 {:.3e}, at dt = 0.0025 {:.3e}; reduction factors {}; smallest relative margin to K1/K2 {margin:.3}",
            res[0],
            res[res.len() - 1],
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn regularity_proxy() -> Check {
    let spec = |n_sub| NoiseSpec::new(1.5, SigmaRule::Power { gamma: 2.0 }, 0.5, 13, n_sub);
    let summ = check_summability(&spec(1).unwrap(), 0.5, DEFAULT_L_STAR);
    let run = |lmax: usize, dt: f64, n_sub: u32| -> Result<(f64, f64), String> {
        let mut cfg = SolverConfig::new(lmax, dt, 1.0);
        cfg.omega = 1.0;
        let mut v0 = SpectralField::zeros(lmax, FieldKind::Stream);
        for (l, m, a) in [(1, 0, 0.4), (2, 1, 0.3), (3, 2, -0.2), (4, 0, 0.1)] {
            v0.set(l, m, Complex64::new(a, 0.5 * a)).unwrap();
        }
        cfg.v0 = v0;
        let traj = Solver::new(cfg, spec(n_sub).map_err(|e| e.to_string())?, 0)
            .and_then(|s| s.run().map_err(|f| f.error))
            .map_err(|e| e.to_string())?;
        let l = traj.ledger();
        Ok((l.sup_v_v2, l.int_av2))
    };
    let base = run(12, 0.01, 2)?;
    let half = run(12, 0.005, 1)?;
    let fine = run(16, 0.01, 2)?;
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    let d_dt = rel(half.0, base.0).max(rel(half.1, base.1));
    let d_l = rel(fine.0, base.0).max(rel(fine.1, base.1));
    let finite = [base, half, fine]
        .iter()
        .all(|(a, b)| a.is_finite() && b.is_finite());
    verdict(
        summ.converged && finite && d_dt < 0.05 && d_l < 0.05,
        format!(
            "summable {} (sum {:.4}); sup|v|_V^2 {:.4e}, int|Av|^2 {:.4e}; change under dt halving {:.2}%, under lmax 12 -> 16 {:.2}%",
            summ.converged,
            summ.value,
            base.0,
            base.1,
            100.0 * d_dt,
            100.0 * d_l
        ),
    )
}

fn run_cli(cfg: &Path, out: &Path, workers: usize) -> Result<(), String> {
    let st = Command::new(env!("CARGO_BIN_EXE_snse"))
        .arg("simulate")
        .arg("--config")
        .arg(cfg)
        .arg("--output")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if st.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&st.stderr).into_owned())
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 5\n[grid]\nlmax = 8\n[solver]\ndt = 0.01\nt_end = 0.3\nomega = 1.0\n[noise]\nbeta = 1.5\nsigma = \"power:gamma=2\"\n[initial]\nkind = \"random\"\namplitude = 0.5\n[verify]\nn_paths = 4\n",
    )
    .map_err(|e| e.to_string())?;
    let outs: Vec<_> = [(1, "a"), (4, "b"), (1, "c")]
        .iter()
        .map(|&(w, name)| {
            let o = dir.path().join(name);
            run_cli(&cfg, &o, w).map(|_| o)
        })
        .collect::<Result<_, _>>()?;
    let read = |o: &Path, f: &str| std::fs::read(o.join(f)).map_err(|e| format!("{f}: {e}"));
    let mut same = true;
    for f in ["diagnostics.csv", "ensemble.csv"] {
        let a = read(&outs[0], f)?;
        same &= a == read(&outs[1], f)? && a == read(&outs[2], f)?;
    }
    let rows = read(&outs[0], "diagnostics.csv")?
        .iter()
        .filter(|&&b| b == b'\n')
        .count();
    verdict(
        same && rows == 32,
        format!("diagnostics.csv and ensemble.csv bitwise identical across 1 and 4 workers and reruns: {same} ({rows} lines)"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("operator identities", 10.0, operator_identities),
        ("basis and spectrum", 5.0, basis_and_spectrum),
        ("single-mode exact decay", 1.0, single_mode_decay),
        ("nonlinear-term oracle", 30.0, nonlinear_oracle),
        ("subordinator law", 10.0, subordinator_law),
        ("stable moment scaling", 60.0, stable_moment_scaling),
        ("OU moment bound", 120.0, ou_moment_bound),
        ("energy identity", 60.0, energy_identity),
        ("strong-solution regularity proxy", 120.0, regularity_proxy),
        ("determinism", 120.0, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *budget;
        let (ok, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<34} {}  {detail} [{secs:.2} s, budget {budget} s{}]",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            if in_time { "" } else { ", over budget" }
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
