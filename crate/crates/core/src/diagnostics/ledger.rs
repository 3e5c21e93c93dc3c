/// Instantaneous quantities entering the ledger at one end of a step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LedgerSample {
    pub v_h2: f64,
    pub v_v2: f64,
    pub v_da2: f64,
    /// `b(v, v, z)`.
    pub bvvz: f64,
    /// `(F, v)`.
    pub fv: f64,
    /// `|F|²_H`.
    pub f_h2: f64,
    pub z_h2: f64,
    pub z_v2: f64,
}

/// Running integrals along a trajectory.
///
/// Squared norms of `v` use the logarithmic mean of the endpoint values,
/// which is exact for exponential decay; every other integrand uses the
/// trapezoid rule. Both are second order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub t: f64,
    pub v0_h2: f64,
    pub v0_v2: f64,
    pub v_h2: f64,
    /// `∫|v|²_V`.
    pub int_v2: f64,
    /// `∫ b(v, v, z)`.
    pub int_bvvz: f64,
    /// `∫ (F, v)`.
    pub int_fv: f64,
    /// `∫|Av|²`.
    pub int_av2: f64,
    /// `∫|v|²`.
    pub int_vh2: f64,
    /// `∫|v|²|z|²_V`.
    pub int_vh2_zv2: f64,
    /// `∫|F|²`.
    pub int_f2: f64,
    /// `∫|z|²_V`.
    pub int_zv2: f64,
    pub sup_v_h2: f64,
    pub sup_v_v2: f64,
    pub sup_z_h2: f64,
    pub sup_z_v2: f64,
}

impl EnergyLedger {
    pub fn new(v0_h2: f64, v0_v2: f64) -> Self {
        Self {
            v0_h2,
            v0_v2,
            v_h2: v0_h2,
            sup_v_h2: v0_h2,
            sup_v_v2: v0_v2,
            ..Default::default()
        }
    }

    /// Adds one step `[t, t + dt]` with endpoint samples `a` and `b`.
    pub fn record(&mut self, dt: f64, a: &LedgerSample, b: &LedgerSample) {
        let trap = |f: &dyn Fn(&LedgerSample) -> f64| 0.5 * dt * (f(a) + f(b));
        let logm = |f: &dyn Fn(&LedgerSample) -> f64| dt * log_mean(f(a), f(b));
        self.int_v2 += logm(&|s| s.v_v2);
        self.int_bvvz += trap(&|s| s.bvvz);
        self.int_fv += trap(&|s| s.fv);
        self.int_av2 += logm(&|s| s.v_da2);
        self.int_vh2 += logm(&|s| s.v_h2);
        self.int_vh2_zv2 += trap(&|s| s.v_h2 * s.z_v2);
        self.int_f2 += trap(&|s| s.f_h2);
        self.int_zv2 += trap(&|s| s.z_v2);
        for s in [a, b] {
            self.sup_v_h2 = self.sup_v_h2.max(s.v_h2);
            self.sup_v_v2 = self.sup_v_v2.max(s.v_v2);
            self.sup_z_h2 = self.sup_z_h2.max(s.z_h2);
            self.sup_z_v2 = self.sup_z_v2.max(s.z_v2);
        }
        self.v_h2 = b.v_h2;
        self.t += dt;
    }

    pub fn is_finite(&self) -> bool {
        [
            self.v_h2,
            self.int_v2,
            self.int_bvvz,
            self.int_fv,
            self.int_av2,
            self.int_f2,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

/// `(a − b) / (ln a − ln b)` for nonnegative `a`, `b`.
fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let r = b / a;
    if (r - 1.0).abs() < 1e-6 {
        // Series in x = r − 1 avoids cancellation.
        let x = r - 1.0;
        return a * (1.0 + x / 2.0 - x * x / 12.0);
    }
    (b - a) / r.ln()
}

/// `|v(T)|² − |v(0)|² + 2ν∫|v|²_V − 2∫b(v,v,z) − 2∫(F,v)`.
pub fn energy_residual(ledger: &EnergyLedger, nu: f64) -> f64 {
    ledger.v_h2 - ledger.v0_h2 + 2.0 * nu * ledger.int_v2
        - 2.0 * ledger.int_bvvz
        - 2.0 * ledger.int_fv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_ledger_has_zero_residual() {
        let mut l = EnergyLedger::new(0.0, 0.0);
        let s = LedgerSample::default();
        for _ in 0..10 {
            l.record(0.1, &s, &s);
        }
        assert_eq!(energy_residual(&l, 1.0), 0.0);
        assert!((l.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_mean_limits() {
        assert_eq!(log_mean(2.0, 2.0), 2.0);
        assert_eq!(log_mean(0.0, 3.0), 0.0);
        let (a, b) = (1.0, (-0.3f64).exp());
        assert!((log_mean(a, b) - (1.0 - b) / 0.3).abs() < 1e-15);
        let near = log_mean(1.0, 1.0 + 1e-8);
        assert!((near - (1.0 + 5e-9)).abs() < 1e-15);
    }

    #[test]
    fn exact_decay_ledger() {
        // |v|² = e^{−4t}, |v|²_V = 2e^{−4t}: exact for any dt.
        let nu = 1.0;
        let res = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut l = EnergyLedger::new(1.0, 2.0);
            let at = |t: f64| LedgerSample {
                v_h2: (-4.0 * t).exp(),
                v_v2: 2.0 * (-4.0 * t).exp(),
                ..Default::default()
            };
            for k in 0..n {
                l.record(dt, &at(k as f64 * dt), &at((k + 1) as f64 * dt));
            }
            energy_residual(&l, nu)
        };
        assert!(res(3).abs() < 1e-14);
        assert!(res(100).abs() < 1e-13);
    }

    #[test]
    fn second_order_on_sign_changing_integrand() {
        // v oscillates: |v|² = 1 + sin²(3t) and (F, v) = cos t; reference integrals are exact.
        let run = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut l = EnergyLedger::new(1.0, 1.0);
            let at = |t: f64| LedgerSample {
                v_h2: 1.0 + (3.0 * t).sin().powi(2),
                fv: t.cos(),
                ..Default::default()
            };
            for k in 0..n {
                l.record(dt, &at(k as f64 * dt), &at((k + 1) as f64 * dt));
            }
            let exact_vh2 = 1.5 - (6.0f64).sin() / 12.0;
            ((l.int_vh2 - exact_vh2).abs(), (l.int_fv - 1f64.sin()).abs())
        };
        let (a, b) = (run(40), run(80));
        assert!((a.0 / b.0).log2() > 1.9 && (a.1 / b.1).log2() > 1.9);
    }

    #[test]
    fn sups_and_monotone_integral() {
        let mut l = EnergyLedger::new(1.0, 2.0);
        let a = LedgerSample {
            v_h2: 1.0,
            v_v2: 2.0,
            z_h2: 3.0,
            ..Default::default()
        };
        let b = LedgerSample {
            v_h2: 4.0,
            v_v2: 1.0,
            ..Default::default()
        };
        l.record(0.5, &a, &b);
        let first = l.int_v2;
        l.record(0.5, &b, &a);
        assert!(l.int_v2 > first);
        assert_eq!(l.sup_v_h2, 4.0);
        assert_eq!(l.sup_z_h2, 3.0);
        assert_eq!(l.v_h2, 1.0);
    }
}
