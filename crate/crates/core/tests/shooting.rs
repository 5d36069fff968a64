use ks_blowup::error::{Error, Result};
use ks_blowup::dimension::Dim;
use ks_blowup::shooting::{
    objective, stable_estimate, trap_search, Objective, Probe, ProbeVerdict, SearchStatus, ShootConfig,
};
use ks_blowup::sim::SimConfig;

/// Unstable modes with their linear ODEs, `eps_k' = (1 - k/l) eps_k + f_k s^{-2}`,
/// sampled every `cadence` and classified like a simulator probe.
struct Toy {
    s0: f64,
    a: f64,
    f: Vec<f64>,
    horizon: f64,
    cadence: f64,
}

impl Toy {
    fn lambda(&self, k: usize) -> f64 {
        1.0 - k as f64 / self.f.len() as f64
    }

    /// Stable amplitudes over an infinite horizon: `eps_k(s0) = -f_k int_{s0}^inf e^{-lambda (t - s0)} t^{-2} dt`.
    fn stable_value(&self) -> Vec<f64> {
        (0..self.f.len())
            .map(|k| {
                let lam = self.lambda(k);
                // composite Simpson in t - s0
                let tmax = 80.0 / lam;
                let n = 400_000;
                let h = tmax / n as f64;
                let g = |t: f64| (-lam * t).exp() / (self.s0 + t).powi(2);
                let mut sum = g(0.0) + g(tmax);
                for i in 1..n {
                    sum += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                let integral = sum * h / 3.0;
                -self.s0 * self.s0 / self.a * self.f[k] * integral
            })
            .collect()
    }
}

impl Objective for Toy {
    type Extra = usize;

    fn ell(&self) -> usize {
        self.f.len()
    }

    fn evaluate(&self, dvec: &[f64]) -> Result<(Probe, usize)> {
        let l = self.f.len();
        let rhs = |s: f64, e: &[f64]| -> Vec<f64> {
            (0..l).map(|k| self.lambda(k) * e[k] + self.f[k] / (s * s)).collect()
        };
        let mut eps: Vec<f64> = dvec.iter().map(|d| self.a * d / (self.s0 * self.s0)).collect();
        let slices = (self.horizon / self.cadence).round() as usize;
        let sub = 40;
        let h = self.cadence / sub as f64;
        let ratio = |s: f64, e: &[f64]| e.iter().map(|x| x.abs() * s * s / self.a).fold(0.0, f64::max);
        let energy = |e: &[f64]| e.iter().map(|x| x * x).sum::<f64>();
        let mut s = self.s0;
        let mut prev_energy = energy(&eps);
        let mut max_ratio = ratio(s, &eps);
        let mut exit = None;
        for i in 1..=slices {
            for _ in 0..sub {
                let k1 = rhs(s, &eps);
                let y2: Vec<f64> = eps.iter().zip(&k1).map(|(e, k)| e + 0.5 * h * k).collect();
                let k2 = rhs(s + 0.5 * h, &y2);
                let y3: Vec<f64> = eps.iter().zip(&k2).map(|(e, k)| e + 0.5 * h * k).collect();
                let k3 = rhs(s + 0.5 * h, &y3);
                let y4: Vec<f64> = eps.iter().zip(&k3).map(|(e, k)| e + h * k).collect();
                let k4 = rhs(s + h, &y4);
                for j in 0..l {
                    eps[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
                s += h;
            }
            s = self.s0 + i as f64 * self.cadence;
            let r = ratio(s, &eps);
            max_ratio = max_ratio.max(r);
            let e = energy(&eps);
            if r >= 1.0 {
                exit = Some(e > prev_energy);
                break;
            }
            prev_energy = e;
        }
        let scale = s * s / self.a;
        let exit_vector: Vec<f64> = eps.iter().map(|e| e * scale).collect();
        let verdict = match exit {
            Some(_) => {
                let mode = (0..l)
                    .max_by(|&a, &b| exit_vector[a].abs().total_cmp(&exit_vector[b].abs()))
                    .unwrap();
                ProbeVerdict::Exit { mode }
            }
            None => ProbeVerdict::Trapped,
        };
        let probe = Probe {
            dvec: dvec.to_vec(),
            s_exit: s,
            verdict,
            exit_vector,
            transverse: exit,
            max_ratio,
            estimate: Some(stable_estimate(dvec, &eps, self.s0, s, self.a)),
        };
        Ok((probe, 0))
    }
}

fn toy2() -> Toy {
    Toy {
        s0: 50.0,
        a: 20.0,
        f: vec![6.0, -3.0],
        horizon: 30.0,
        cadence: 0.1,
    }
}

#[test]
fn toy_search_recovers_stable_value() {
    let toy = toy2();
    let exact = toy.stable_value();
    assert!(exact.iter().all(|x| x.abs() > 0.1 && x.abs() < 1.0), "{exact:?}");
    let budget = 64;
    let r = trap_search(&toy, budget, 4).unwrap();
    let tol = 2f64.powf(-(budget as f64) / 4.0);
    for k in 0..2 {
        assert!((r.dvec[k] - exact[k]).abs() <= tol, "k={k} {:?} vs {exact:?}", r.dvec);
    }
    assert!(r.history.len() <= budget);
    assert_ne!(r.status, SearchStatus::NoBracket);
}

#[test]
fn toy_search_three_modes() {
    let toy = Toy {
        s0: 50.0,
        a: 20.0,
        f: vec![4.0, -3.0, 1.5],
        horizon: 45.0,
        cadence: 0.1,
    };
    let exact = toy.stable_value();
    let budget = 64;
    let r = trap_search(&toy, budget, 4).unwrap();
    let tol = 2f64.powf(-(budget as f64) / 4.0);
    for k in 0..3 {
        assert!((r.dvec[k] - exact[k]).abs() <= tol, "k={k} {:?} vs {exact:?}", r.dvec);
    }
}

#[test]
fn toy_search_single_worker() {
    let toy = toy2();
    let exact = toy.stable_value();
    let r = trap_search(&toy, 48, 1).unwrap();
    for k in 0..2 {
        assert!((r.dvec[k] - exact[k]).abs() <= 2f64.powf(-12.0), "{:?} vs {exact:?}", r.dvec);
    }
}

#[test]
fn budget_one_returns_the_centre_probe() {
    let toy = toy2();
    let r = trap_search(&toy, 1, 4).unwrap();
    assert_eq!(r.history.len(), 1);
    assert_eq!(r.best, 0);
    let (p, _) = toy.evaluate(&[0.0, 0.0]).unwrap();
    assert_eq!(r.best_probe(), &p);
    assert_eq!(r.verdict, p.verdict);
    assert_eq!(r.status, SearchStatus::NoBracket);
}

#[test]
fn zero_budget_or_workers_rejected() {
    let toy = toy2();
    assert!(matches!(trap_search(&toy, 0, 4), Err(Error::Argument(_))));
    assert!(matches!(trap_search(&toy, 8, 0), Err(Error::Argument(_))));
    let cfg = ShootConfig {
        budget: 0,
        ..ShootConfig::default()
    };
    assert!(matches!(cfg.validate(), Err(Error::Argument(_))));
}

#[test]
fn search_trace_is_deterministic() {
    let toy = toy2();
    let a = trap_search(&toy, 30, 4).unwrap();
    let b = trap_search(&toy, 30, 4).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.brackets, b.brackets);
    assert_eq!(a.best, b.best);
}

#[test]
fn best_exit_time_is_monotone_and_budget_respected() {
    let toy = toy2();
    for budget in [2, 5, 13, 40] {
        let r = trap_search(&toy, budget, 3).unwrap();
        assert!(r.history.len() <= budget);
        let m = r.best_s_exit_by_round();
        assert_eq!(m.len(), r.rounds);
        assert!(m.windows(2).all(|w| w[1] >= w[0]), "{m:?}");
        assert_eq!(*m.last().unwrap(), r.s_exit);
    }
}

#[test]
fn exits_sit_on_the_square_boundary() {
    let toy = toy2();
    let r = trap_search(&toy, 24, 4).unwrap();
    for h in &r.history {
        if h.probe.exited() {
            let m = h.probe.exit_vector.iter().map(|x| x.abs()).fold(0.0, f64::max);
            assert!(m >= 1.0, "{:?}", h.probe);
            // growth is outward for the linear modes
            assert_eq!(h.probe.transverse, Some(true));
        }
    }
    assert!(r.flagged_exits().is_empty());
}

fn coarse() -> ShootConfig {
    ShootConfig {
        sim: SimConfig {
            d: Dim::Four,
            s0: 50.0,
            a: 20.0,
            dy: 0.1,
            horizon: 4.0,
            cadence: 0.1,
            ansatz_k: 5.0,
            ..SimConfig::default()
        },
        budget: 8,
        workers: 4,
        ..ShootConfig::default()
    }
}

#[test]
fn sim_large_amplitude_exits_early_through_mode_zero() {
    let cfg = coarse();
    for sign in [-1.0, 1.0] {
        let (p, traj) = objective(&[sign, 0.0], &cfg).unwrap();
        assert_eq!(p.verdict, ProbeVerdict::Exit { mode: 0 }, "{p:?}");
        assert!(p.s_exit < 51.0, "{}", p.s_exit);
        assert_eq!(p.exit_vector[0].signum(), sign);
        assert_eq!(p.transverse, Some(true));
        assert_eq!(traj.all_records().len(), traj.reports.len());
    }
}

#[test]
fn sim_exit_sign_flips_across_the_stable_value() {
    let cfg = coarse();
    let (lo, _) = objective(&[-0.2, 0.0], &cfg).unwrap();
    let (hi, _) = objective(&[0.2, 0.0], &cfg).unwrap();
    assert!(lo.exited() && hi.exited());
    assert!(lo.exit_vector[0] < 0.0 && hi.exit_vector[0] > 0.0, "{lo:?} {hi:?}");
    // the estimates of both sides agree on where the unstable growth vanishes
    let (a, b) = (lo.estimate.unwrap()[0], hi.estimate.unwrap()[0]);
    assert!((a - b).abs() < 0.02, "{a} {b}");
}

#[test]
fn sim_search_improves_exit_time() {
    let mut cfg = coarse();
    cfg.sim.horizon = 10.0;
    let r = ks_blowup::shooting::shoot(&cfg).unwrap();
    assert!(r.history.len() <= cfg.budget);
    let m = r.best_s_exit_by_round();
    assert!(m.windows(2).all(|w| w[1] >= w[0]));
    assert!(r.s_exit > r.history[0].probe.s_exit, "{m:?}");
    assert!(r.flagged_exits().is_empty(), "{:?}", r.flagged_exits());
    assert!(r.extra.is_some());
}

#[test]
fn sim_time_quotient_ignores_mode_zero() {
    let mut cfg = coarse();
    cfg.quotient_time = true;
    let (p, _) = objective(&[0.0, 1.0], &cfg).unwrap();
    assert_eq!(p.verdict, ProbeVerdict::Exit { mode: 1 });
    let (p, _) = objective(&[0.0, 0.0], &cfg).unwrap();
    assert!(!matches!(p.verdict, ProbeVerdict::Exit { mode: 0 }));
}

#[test]
fn shoot_config_from_toml() {
    let cfg = ShootConfig::from_toml_str("budget = 12\nworkers = 2\n[sim]\nd = 4\nhorizon = 5.0\n").unwrap();
    assert_eq!(cfg.budget, 12);
    assert_eq!(cfg.sim.horizon, 5.0);
    assert!(ShootConfig::from_toml_str("budget = 0").is_err());
    assert!(ShootConfig::from_toml_str("bogus = 1").is_err());
    let bad = ShootConfig::from_toml_str("[sim]\ndiagnostics = false\n");
    assert!(matches!(bad, Err(Error::Config(_))));
}

#[test]
fn objective_rejects_out_of_box_amplitudes() {
    let cfg = coarse();
    assert!(matches!(objective(&[1.5, 0.0], &cfg), Err(Error::Argument(_))));
    assert!(matches!(objective(&[0.0], &cfg), Err(Error::Argument(_))));
}
