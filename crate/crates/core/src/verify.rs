//! The acceptance criteria as runnable checks.
//!
//! Each criterion returns an [`Outcome`]; gating outcomes decide the verdict,
//! the others (variant settings) are reported alongside.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    discrete_spectrum, fit_loglog_slope, mode_ode_residuals, BoundParams, Diagnostics,
};
use crate::eigenbasis::{
    build_residual_poly, compute_b, compute_c, frac, inner_product, kummer_eigenpoly, nonlocal_expand,
    partial_mass_eigen, radial_apply, rat, rho_inner_y, rho_projection, two_alpha, ExactPoly, RadialOp, Var,
    Weight,
};
use crate::error::{Error, Result};
use crate::profile::ProfileParams;
use crate::shooting::{shoot, ShootConfig};
use crate::sim::{
    estimate_blowup_time, run, transform, Boundary, Frame, Grid, Integrator, RadialState, Scheme, SimConfig,
    StopReason,
};
use crate::Dim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Criteria 1 to 4.
    Exact,
    /// Criterion 5.
    Profile,
    /// Criteria 6 to 11.
    Sim,
    All,
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::Exact => vec![1, 2, 3, 4],
            Suite::Profile => vec![5],
            Suite::Sim => (6..=11).collect(),
            Suite::All => (1..=11).collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Suite::Exact),
            "profile" => Ok(Suite::Profile),
            "sim" => Ok(Suite::Sim),
            "all" => Ok(Suite::All),
            _ => Err(Error::Argument(format!("unknown suite {s:?}; expected exact, profile, sim or all"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Exact => "exact",
            Suite::Profile => "profile",
            Suite::Sim => "sim",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

/// Deliberate corruption, for checking that the suite notices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Adds one to the computed `B`.
    ComputeB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Threads for the shooting criterion.
    pub workers: usize,
    /// Also report the wide-cutoff variant of criteria 8 to 10 (non-gating).
    pub variants: bool,
    pub fault: Option<Fault>,
    /// Mesh width of the self-similar runs (criteria 9 and 10).
    pub dy: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            workers: 4,
            variants: true,
            fault: None,
            dy: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub title: String,
    /// Counts toward the verdict.
    pub gating: bool,
    pub passed: bool,
    /// The check could not be evaluated.
    pub error: Option<String>,
    pub seconds: f64,
    pub limit_seconds: Option<f64>,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl Outcome {
    fn new(id: u8, title: &str, limit: Option<f64>) -> Self {
        Self {
            id,
            title: title.to_string(),
            gating: true,
            passed: true,
            error: None,
            seconds: 0.0,
            limit_seconds: limit,
            detail: String::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&what.into());
    }

    fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    /// One report line.
    pub fn line(&self) -> String {
        let status = match (&self.error, self.passed, self.gating) {
            (Some(_), _, _) => "ERROR",
            (None, true, true) => "PASS",
            (None, false, true) => "FAIL",
            (None, true, false) => "info-pass",
            (None, false, false) => "info-fail",
        };
        let detail = match &self.error {
            Some(e) => e.clone(),
            None => self.detail.clone(),
        };
        format!("[{status}] criterion {:>2} {} ({:.2}s): {detail}", self.id, self.title, self.seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub outcomes: Vec<Outcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().filter(|o| o.gating).all(|o| o.passed && o.error.is_none())
    }

    pub fn errored(&self) -> bool {
        self.outcomes.iter().any(|o| o.gating && o.error.is_some())
    }

    pub fn failures(&self) -> Vec<&Outcome> {
        self.outcomes
            .iter()
            .filter(|o| o.gating && !(o.passed && o.error.is_none()))
            .collect()
    }
}

/// Runs one criterion and its variant lines.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let t = Instant::now();
    let (title, limit, res): (&str, Option<f64>, Result<Vec<Outcome>>) = match id {
        1 => ("exact constants", Some(1.0), criterion_constants(opts).map(|o| vec![o])),
        2 => ("golden polynomials", Some(1.0), criterion_golden().map(|o| vec![o])),
        3 => ("null projection", None, criterion_null_projection(opts).map(|o| vec![o])),
        4 => ("orthogonality and eigenrelations", None, criterion_orthogonality().map(|o| vec![o])),
        5 => ("profile", Some(5.0), criterion_profile().map(|o| vec![o])),
        6 => ("discrete spectrum", Some(30.0), criterion_spectrum().map(|o| vec![o])),
        7 => ("simulator correctness", Some(60.0), criterion_simulator().map(|o| vec![o])),
        8 => ("error-decomposition slopes", Some(120.0), criterion_ehat_slopes(opts)),
        9 => ("null-mode dynamics", Some(300.0), criterion_null_mode(opts)),
        10 => ("shooting", Some(1800.0), criterion_shooting(opts)),
        11 => ("final-profile scaling (exploratory)", Some(1800.0), criterion_final_profile(opts)),
        _ => return Err(Error::Argument(format!("no criterion {id}; criteria are 1 to 11"))),
    };
    let seconds = t.elapsed().as_secs_f64();
    let mut out = match res {
        Ok(v) => v,
        Err(e) => {
            let mut o = Outcome::new(id, title, limit);
            o.passed = false;
            o.error = Some(e.to_string());
            vec![o]
        }
    };
    // variant lines time themselves; the gating line keeps the rest
    let variant_seconds: f64 = out.iter().filter(|o| !o.gating).map(|o| o.seconds).sum();
    for o in out.iter_mut() {
        o.id = id;
        if o.title.is_empty() {
            o.title = title.to_string();
        }
        o.limit_seconds = limit;
        if o.gating {
            o.seconds = seconds - variant_seconds;
            if let Some(l) = limit {
                if o.seconds > l {
                    let msg = format!("runtime {:.1}s over the {l}s budget", o.seconds);
                    o.check(false, msg);
                }
            }
        }
    }
    Ok(out)
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Report> {
    let mut outcomes = Vec::new();
    for id in suite.criteria() {
        outcomes.extend(run_criterion(id, opts)?);
    }
    Ok(Report { suite, outcomes })
}

// ---------------------------------------------------------------- exact

/// `B` and `c` of each dimension.
pub const GOLDEN_B: [(Dim, i64); 2] = [(Dim::Three, 39360), (Dim::Four, 576)];
pub const GOLDEN_C: [(Dim, i64, i64); 2] = [(Dim::Three, 1, 118080), (Dim::Four, 1, 288)];

fn computed_b(dim: Dim, opts: &VerifyOptions) -> Result<BigRational> {
    let b = compute_b(dim)?;
    Ok(match opts.fault {
        Some(Fault::ComputeB) => b + rat(1),
        None => b,
    })
}

fn criterion_constants(opts: &VerifyOptions) -> Result<Outcome> {
    let mut o = Outcome::new(1, "", None);
    let mut mismatches = 0;
    for (dim, b) in GOLDEN_B {
        let got = computed_b(dim, opts)?;
        if got != rat(b) {
            mismatches += 1;
            o.check(false, format!("compute_B(d={dim}) = {got}, expected {b}"));
        }
    }
    for (dim, p, q) in GOLDEN_C {
        let got = compute_c(dim)?;
        if got != frac(p, q) {
            mismatches += 1;
            o.check(false, format!("compute_c(d={dim}) = {got}, expected {p}/{q}"));
        }
    }
    if o.passed {
        o.note("0/4 mismatches");
    }
    o.metric("mismatches", mismatches as f64);
    Ok(o)
}

fn zpoly(c: &[i64]) -> ExactPoly {
    ExactPoly::from_ints(Var::Z, c)
}

fn ypoly(c: &[(i64, i64)]) -> ExactPoly {
    ExactPoly::new(Var::Y, c.iter().map(|&(p, q)| frac(p, q)).collect())
}

/// Listed eigenpolynomials `H_n(z)`.
pub fn golden_h(dim: Dim) -> Vec<ExactPoly> {
    match dim {
        Dim::Three => vec![
            zpoly(&[1]),
            zpoly(&[-6, 1]),
            zpoly(&[60, -20, 1]),
            zpoly(&[-840, 420, -42, 1]),
            zpoly(&[15120, -10080, 1512, -72, 1]),
            zpoly(&[-332640, 277200, -55440, 3960, -110, 1]),
            zpoly(&[8648640, -8648640, 2162160, -205920, 8580, -156, 1]),
        ],
        Dim::Four => vec![
            zpoly(&[1]),
            zpoly(&[-8, 1]),
            zpoly(&[96, -24, 1]),
            zpoly(&[-1536, 576, -48, 1]),
            zpoly(&[30720, -15360, 1920, -80, 1]),
        ],
    }
}

/// Listed expansion of the nonlocal product in `z`.
pub fn golden_nonlocal(dim: Dim) -> ExactPoly {
    match dim {
        Dim::Three => ExactPoly::new(
            Var::Z,
            vec![
                rat(705600),
                rat(-940800),
                rat(364560),
                rat(-57792),
                frac(12628, 3),
                frac(-416, 3),
                frac(5, 3),
            ],
        ),
        Dim::Four => ExactPoly::new(Var::Z, vec![rat(9216), rat(-5760), rat(1056), rat(-70), frac(3, 2)]),
    }
}

/// Listed null partial-mass eigenfunction `varphi_{2l}`.
pub fn golden_null_mode(dim: Dim) -> ExactPoly {
    match dim {
        Dim::Three => ypoly(&[(-280, 1), (0, 1), (28, 1), (0, 1), (-2, 3), (0, 1), (1, 243)]),
        Dim::Four => ypoly(&[(24, 1), (0, 1), (-2, 1), (0, 1), (1, 32)]),
    }
}

/// Listed residual polynomial `P_{4l-2}`.
pub fn golden_residual(dim: Dim) -> ExactPoly {
    let b = rat(GOLDEN_B.iter().find(|(d, _)| *d == dim).unwrap().1);
    let rest = match dim {
        Dim::Three => ypoly(&[
            (235200, 1),
            (0, 1),
            (-62720, 1),
            (0, 1),
            (17360, 3),
            (0, 1),
            (-19264, 81),
            (0, 1),
            (1148, 243),
            (0, 1),
            (-4, 243),
        ]),
        Dim::Four => ypoly(&[(2304, 1), (0, 1), (-480, 1), (0, 1), (33, 1), (0, 1), (-1, 8)]),
    };
    &golden_null_mode(dim).scale(&-b) + &rest
}

fn criterion_golden() -> Result<Outcome> {
    let mut o = Outcome::new(2, "", None);
    let (mut total, mut bad) = (0, 0);
    let mut cmp = |o: &mut Outcome, name: String, got: ExactPoly, want: ExactPoly| {
        total += 1;
        if got != want {
            bad += 1;
            o.check(false, format!("{name}: got {got}, expected {want}"));
        }
    };
    for dim in Dim::all() {
        for (n, h) in golden_h(dim).into_iter().enumerate() {
            cmp(&mut o, format!("H_{n}(d={dim})"), kummer_eigenpoly(dim, n), h);
        }
        cmp(&mut o, format!("nonlocal_expand(d={dim})"), nonlocal_expand(dim)?, golden_nonlocal(dim));
        let l = dim.ell() as usize;
        cmp(&mut o, format!("varphi_{}(d={dim})", 2 * l), partial_mass_eigen(dim, l), golden_null_mode(dim));
        cmp(&mut o, format!("P_{}(d={dim})", 4 * l - 2), build_residual_poly(dim)?, golden_residual(dim));
    }
    o.detail = if bad == 0 {
        format!("0/{total} mismatches")
    } else {
        format!("{bad}/{total} mismatches; {}", o.detail)
    };
    o.metric("mismatches", bad as f64);
    Ok(o)
}

fn criterion_null_projection(opts: &VerifyOptions) -> Result<Outcome> {
    let mut o = Outcome::new(3, "", None);
    for dim in Dim::all() {
        let l = dim.ell() as usize;
        let phi = partial_mass_eigen(dim, l);
        let p = build_residual_poly(dim)?;
        let proj = rho_projection(dim, &p, &phi)?;
        o.check(proj.is_zero(), format!("projection of P onto varphi_{} is {proj} for d={dim}", 2 * l));
        let q = &(&phi * &phi).scale(&rat(dim.d() as i64)) + &(&phi * &radial_apply(&phi, RadialOp::Euler)?);
        let b = rho_projection(dim, &q, &phi)?;
        let want = rat(GOLDEN_B.iter().find(|(d, _)| *d == dim).unwrap().1);
        o.check(b == want, format!("quadratic projection {b} != {want} for d={dim}"));
        let used = computed_b(dim, opts)?;
        o.check(used == b, format!("compute_B(d={dim}) = {used} disagrees with the projection {b}"));
    }
    if o.passed {
        o.note("projections exact: 0 and B for d=3, 4");
    }
    Ok(o)
}

fn criterion_orthogonality() -> Result<Outcome> {
    let mut o = Outcome::new(4, "", None);
    let mut pairs = 0;
    for dim in Dim::all() {
        let l = rat(dim.ell() as i64);
        let alpha = dim.alpha();
        for n in 0..=8usize {
            let hn = kummer_eigenpoly(dim, n);
            let pn = partial_mass_eigen(dim, n);
            for m in 0..n {
                pairs += 1;
                let w = inner_product(dim, Weight::W, &hn, &kummer_eigenpoly(dim, m))?;
                o.check(w.is_zero(), format!("<H_{n}, H_{m}>_w = {w} for d={dim}"));
                let r = rho_inner_y(dim, &pn, &partial_mass_eigen(dim, m))?;
                o.check(r.is_zero(), format!("<varphi_{n}, varphi_{m}>_rho = {r} for d={dim}"));
            }
            // density operator: Delta_d phi - alpha y phi' = -2 n alpha phi
            let phi = hn.z_to_y(&two_alpha(dim))?;
            let lhs = &radial_apply(&phi, RadialOp::Laplacian(dim.d()))?
                - &radial_apply(&phi, RadialOp::Euler)?.scale(&alpha);
            let rhs = phi.scale(&(-rat(2 * n as i64) * &alpha));
            o.check(lhs == rhs, format!("density eigenrelation fails at n={n}, d={dim}"));
            // partial-mass operator: Delta_{d+2} varphi - y varphi'/(2l) = -(n/l) varphi
            let lhs = &radial_apply(&pn, RadialOp::Laplacian(dim.d() + 2))?
                - &radial_apply(&pn, RadialOp::Euler)?.scale(&(rat(1) / (rat(2) * &l)));
            let rhs = pn.scale(&(-rat(n as i64) / &l));
            o.check(lhs == rhs, format!("partial-mass eigenrelation fails at n={n}, d={dim}"));
        }
    }
    if o.passed {
        o.note(format!("{pairs} pairs per weight orthogonal; eigenrelations exact for n <= 8"));
    }
    Ok(o)
}

// ---------------------------------------------------------------- profile

fn criterion_profile() -> Result<Outcome> {
    let mut o = Outcome::new(5, "", None);
    for dim in Dim::all() {
        let p = ProfileParams::new(dim)?;
        let (d, l) = (dim.d_f64(), dim.ell() as i32);
        let n = 2401;
        let mut worst = 0.0f64;
        for i in 0..n {
            let xi = 10f64.powf(-6.0 + 12.0 * i as f64 / (n - 1) as f64);
            let q = p.q_of_xi(xi)?;
            worst = worst.max(p.implicit_residual(xi, q).abs());
        }
        o.metric(format!("residual_d{}", dim.d()), worst);
        o.check(worst <= 1e-12, format!("implicit residual {worst:e} > 1e-12 for d={dim}"));

        let xi = 1e-3;
        let target = p.c / d.powi(l + 1);
        let ratio = p.q_deficit(xi)? / xi.powi(2 * l);
        let rel = (ratio / target - 1.0).abs();
        o.metric(format!("taylor_rel_d{}", dim.d()), rel);
        o.check(rel <= 1e-6, format!("Taylor ratio off by {rel:e} for d={dim}"));

        let xi = 1e3;
        let tail = xi * xi * p.q_of_xi(xi)?;
        let rel = (tail / p.q_tail_constant() - 1.0).abs();
        o.metric(format!("tail_rel_d{}", dim.d()), rel);
        o.check(rel <= 5e-3, format!("xi^2 Q off by {:.3}% for d={dim}", 100.0 * rel));
    }
    if o.passed {
        o.note(format!(
            "residual <= {:.1e}; Taylor rel {:.1e}/{:.1e}; tail rel {:.2e}/{:.2e}",
            o.metrics["residual_d3"].max(o.metrics["residual_d4"]),
            o.metrics["taylor_rel_d3"],
            o.metrics["taylor_rel_d4"],
            o.metrics["tail_rel_d3"],
            o.metrics["tail_rel_d4"]
        ));
    }
    Ok(o)
}

// ---------------------------------------------------------------- numerics

fn criterion_spectrum() -> Result<Outcome> {
    let mut o = Outcome::new(6, "", None);
    let mut worst = 0.0f64;
    for dim in Dim::all() {
        let l = dim.ell_f64();
        let ev = discrete_spectrum(dim, 2000, 30.0, 6)?;
        for (k, e) in ev.iter().enumerate() {
            let err = (e + k as f64 / l).abs();
            worst = worst.max(err);
            o.check(err <= 1e-3, format!("eigenvalue {k} = {e} for d={dim}, off by {err:e}"));
        }
    }
    o.metric("max_error", worst);
    if o.passed {
        o.note(format!("first 6 eigenvalues within {worst:.2e} of -k/l (N=2000, Y=30)"));
    }
    Ok(o)
}

fn constant_field_error(dt: f64) -> Result<f64> {
    let (d, v0) = (4.0, 0.1);
    let grid = Arc::new(Grid::uniform(32, 4.0)?);
    let mut it = Integrator::new(Scheme::new(grid.clone(), Dim::Four, Frame::SelfSimilar, Boundary::Neumann)?);
    let mut st = RadialState::from_fn(Frame::SelfSimilar, 50.0, grid, |_| v0)?;
    it.advance_to(&mut st, 51.0, dt, 1.0)?;
    // v' = d v^2 - v from v0 over unit time
    let exact = 1.0 / (d + (1.0 / v0 - d) * 1.0f64.exp());
    Ok(st.values.iter().fold(0.0f64, |m, v| m.max((v - exact).abs())))
}

fn criterion_simulator() -> Result<Outcome> {
    let mut o = Outcome::new(7, "", None);
    let mut steady = 0.0f64;
    for dim in Dim::all() {
        let d = dim.d_f64();
        let grid = Arc::new(Grid::uniform(200, 20.0)?);
        for bc in [Boundary::Neumann, Boundary::Value { value: 1.0 / d }] {
            let mut it = Integrator::new(Scheme::new(grid.clone(), dim, Frame::SelfSimilar, bc)?);
            let mut st = RadialState::from_fn(Frame::SelfSimilar, 1.0, grid.clone(), |_| 1.0 / d)?;
            for _ in 0..10_000 {
                it.step(&mut st, 1e-3)?;
            }
            steady = steady.max(st.values.iter().fold(0.0f64, |m, v| m.max((v - 1.0 / d).abs())));
        }
    }
    o.metric("steady_drift", steady);
    o.check(steady <= 1e-10, format!("steady state drifted by {steady:e}"));

    let err = constant_field_error(1e-4)?;
    o.metric("ode_error", err);
    o.check(err <= 1e-6, format!("constant-field error {err:e} > 1e-6"));

    let e: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| constant_field_error(dt))
        .collect::<Result<_>>()?;
    let orders: Vec<f64> = e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for (i, p) in orders.iter().enumerate() {
        o.metric(format!("order_{i}"), *p);
        o.check((p - 2.0).abs() <= 0.2, format!("observed temporal order {p:.3}, documented 2"));
    }
    if o.passed {
        o.note(format!(
            "steady drift {steady:.1e}; ODE error {err:.1e}; temporal orders {:.3}, {:.3}",
            orders[0], orders[1]
        ));
    }
    Ok(o)
}

/// Projections and flat norm of the ansatz error at the given times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhatSeries {
    pub s: Vec<f64>,
    /// `modes[k][i]`: normalized projection onto `varphi_2k` at `s[i]`.
    pub modes: Vec<Vec<f64>>,
    pub flat: Vec<f64>,
}

pub fn ehat_series(dim: Dim, ansatz_k: f64, s: &[f64]) -> Result<EhatSeries> {
    let cfg = SimConfig {
        d: dim,
        ansatz_k,
        ..SimConfig::default()
    };
    let profile = cfg.profile()?;
    let l = dim.ell_f64();
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let y_max = (4.0 * ansatz_k.max(1.0) * s_max.powf(1.0 / (2.0 * l))).max(200.0);
    let n = (y_max / 0.02).round() as usize;
    let grid = Arc::new(Grid::uniform(n, y_max)?);
    let diag = Diagnostics::with_profile(profile.clone(), grid.clone(), BoundParams::new(20.0, 10.0))?;
    let count = diag.mode_count();
    let mut modes = vec![Vec::with_capacity(s.len()); count];
    let mut flat = Vec::with_capacity(s.len());
    for &si in s {
        let e: Vec<f64> = grid.nodes().iter().map(|&y| profile.ehat(y, si)).collect::<Result<_>>()?;
        for (k, m) in modes.iter_mut().enumerate() {
            m.push(diag.mode_project(&e, k)?);
        }
        flat.push(diag.flat_norm(&e, 0)?);
    }
    Ok(EhatSeries {
        s: s.to_vec(),
        modes,
        flat,
    })
}

fn ehat_outcome(ansatz_k: f64) -> Result<Outcome> {
    let mut o = Outcome::new(8, "", None);
    let s = [50.0, 100.0, 200.0, 400.0];
    let mut parts = Vec::new();
    for dim in Dim::all() {
        let l = dim.ell() as usize;
        let series = ehat_series(dim, ansatz_k, &s)?;
        let mut line = Vec::new();
        for (k, m) in series.modes.iter().enumerate() {
            let slope = fit_loglog_slope(&s, m)?;
            let target = if k == l { -3.0 } else { -2.0 };
            o.metric(format!("slope_d{}_k{k}", dim.d()), slope);
            o.check(
                (slope - target).abs() <= 0.3,
                format!("d={dim} k={k}: slope {slope:.2}, target {target}"),
            );
            line.push(format!("{slope:.2}"));
        }
        let slope = fit_loglog_slope(&s, &series.flat)?;
        let target = -1.0 - 3.0 / (2.0 * l as f64);
        o.metric(format!("flat_slope_d{}", dim.d()), slope);
        o.check(
            (slope - target).abs() <= 0.3,
            format!("d={dim} flat: slope {slope:.2}, target {target:.2}"),
        );
        parts.push(format!("d={dim} modes [{}] flat {slope:.2}", line.join(", ")));
    }
    let summary = parts.join("; ");
    o.detail = if o.passed { summary } else { format!("{}; measured {summary}", o.detail) };
    Ok(o)
}

/// A non-gating line; failures to evaluate are reported, not raised.
fn variant(id: u8, title: String, f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    let t = Instant::now();
    let mut o = f().unwrap_or_else(|e| {
        let mut o = Outcome::new(id, "", None);
        o.passed = false;
        o.error = Some(e.to_string());
        o
    });
    o.gating = false;
    o.title = title;
    o.seconds = t.elapsed().as_secs_f64();
    o
}

fn criterion_ehat_slopes(opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let mut out = vec![ehat_outcome(1.0)?];
    if opts.variants {
        out.push(variant(8, format!("error-decomposition slopes, ansatz_k={WIDE_CUTOFF}"), || {
            ehat_outcome(WIDE_CUTOFF)
        }));
    }
    Ok(out)
}

/// Cutoff scale of the non-gating variant lines.
pub const WIDE_CUTOFF: f64 = 5.0;

/// Zero-perturbation run used by criterion 9.
pub fn null_mode_config(dy: f64, ansatz_k: f64) -> SimConfig {
    SimConfig {
        d: Dim::Four,
        s0: 50.0,
        horizon: 10.0,
        a: 20.0,
        dy,
        cadence: 0.1,
        ansatz_k,
        escape_factor: f64::MAX,
        // four times the profile maximum 1/d
        escape_sup: 1.0,
        ..SimConfig::default()
    }
}

fn null_mode_outcome(dy: f64, ansatz_k: f64) -> Result<Outcome> {
    let mut o = Outcome::new(9, "", None);
    let cfg = null_mode_config(dy, ansatz_k);
    let traj = run(&cfg)?;
    let recs = traj.all_records();
    let s: Vec<f64> = recs.iter().map(|r| r.s).collect();
    let l = cfg.d.ell() as usize;
    let eps: Vec<Vec<f64>> = (0..=l).map(|k| recs.iter().map(|r| r.eps[k]).collect()).collect();
    let res = mode_ode_residuals(cfg.d, &s, &eps)?;
    let slope = res.slopes[l].ok_or_else(|| Error::Unfit("null-mode residual".into()))?;
    o.metric("slope", slope);
    // a log-log slope through a zero crossing means nothing
    let flips = res.r[l].windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    o.metric("sign_changes", flips as f64);
    o.check(flips == 0, format!("residual changes sign {flips} times, so no power law fits"));
    o.metric("s_end", *s.last().unwrap());
    o.check(
        slope <= -2.5,
        format!("|eps_l' + (2/s) eps_l| decays with slope {slope:.2} > -2.5"),
    );
    if traj.stop != StopReason::Horizon {
        o.check(false, format!("run stopped early at s={:.1}: {}", s.last().unwrap(), traj.stop));
    }
    o.note(format!(
        "fitted slope {slope:.2} over s in [{}, {}], stop {}",
        s[0],
        s.last().unwrap(),
        traj.stop
    ));
    Ok(o)
}

fn criterion_null_mode(opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let mut out = vec![null_mode_outcome(opts.dy, 1.0)?];
    if opts.variants {
        out.push(variant(9, format!("null-mode dynamics, ansatz_k={WIDE_CUTOFF}"), || {
            null_mode_outcome(opts.dy, WIDE_CUTOFF)
        }));
    }
    Ok(out)
}

/// The search behind criterion 10.
pub fn shooting_config(dy: f64, ansatz_k: f64, workers: usize) -> ShootConfig {
    ShootConfig {
        sim: SimConfig {
            d: Dim::Four,
            s0: 50.0,
            a: 20.0,
            horizon: 20.0,
            dy,
            cadence: 0.1,
            ansatz_k,
            ..SimConfig::default()
        },
        budget: 64,
        workers,
        ..ShootConfig::default()
    }
}

fn shooting_outcome(dy: f64, ansatz_k: f64, workers: usize) -> Result<Outcome> {
    let mut o = Outcome::new(10, "", None);
    let cfg = shooting_config(dy, ansatz_k, workers);
    let r = shoot(&cfg)?;
    let traj = r.extra.as_ref().ok_or_else(|| Error::Invariant("best probe lost its trajectory".into()))?;
    let best = r.best_probe();
    o.metric("s_exit", r.s_exit);
    o.metric("max_ratio", best.max_ratio);
    o.metric("probes", r.history.len() as f64);
    let horizon_end = cfg.sim.s0 + cfg.sim.horizon;
    let full = traj.trapped() && (traj.final_state.time - horizon_end).abs() < 1e-9;
    o.check(
        full,
        format!(
            "best probe d={:?} {} at s={:.2}, worst slack ratio {:.3}",
            r.dvec, r.verdict, r.s_exit, best.max_ratio
        ),
    );
    let dist: Vec<f64> = traj.profile_distance.iter().map(|(_, x)| *x).collect();
    let increases = dist.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-9)).count();
    o.metric("profile_distance_increases", increases as f64);
    if let (Some(a), Some(b)) = (dist.first(), dist.last()) {
        o.metric("profile_distance_first", *a);
        o.metric("profile_distance_last", *b);
    }
    let pd = &traj.profile_distance;
    let last_rise = pd.windows(2).filter(|w| w[1].1 > w[0].1 * (1.0 + 1e-9)).map(|w| w[1].0).last();
    let rises = format!("sup|v - Q| rises on {increases} of {} slices", dist.len().saturating_sub(1));
    o.check(
        increases == 0,
        match (last_rise, dist.first(), dist.last()) {
            (Some(s), Some(a), Some(b)) => format!("{rises}, the last at s={s:.1} ({a:.3e} at the start, {b:.3e} at the end)"),
            _ => rises,
        },
    );
    let flagged = r.flagged_exits();
    o.metric("flagged_exits", flagged.len() as f64);
    o.check(flagged.is_empty(), format!("{} exits without outgoing crossing", flagged.len()));
    let summary = format!(
        "{:?}: d={:?} {} s_exit={:.2} max ratio {:.3}, {} probes",
        r.status,
        r.dvec,
        r.verdict,
        r.s_exit,
        best.max_ratio,
        r.history.len()
    );
    o.detail = if o.passed { summary } else { format!("{}; {summary}", o.detail) };
    Ok(o)
}

fn criterion_shooting(opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let mut out = vec![shooting_outcome(opts.dy, 1.0, opts.workers)?];
    if opts.variants {
        out.push(variant(10, format!("shooting, ansatz_k={WIDE_CUTOFF}"), || {
            shooting_outcome(opts.dy, WIDE_CUTOFF, opts.workers)
        }));
    }
    Ok(out)
}

// ---------------------------------------------------------------- final profile

/// Physical run behind criterion 11.
/// Physical run from the initial-data family at self-similar time
/// `FINAL_PROFILE_S_INIT`, blowup expected near `exp(-s_init)`.
pub fn final_profile_config(dim: Dim, ansatz_k: f64, dvec: Vec<f64>) -> SimConfig {
    let tau0 = (-FINAL_PROFILE_S_INIT).exp();
    SimConfig {
        d: dim,
        frame: Frame::Physical,
        s_init: FINAL_PROFILE_S_INIT,
        a: 20.0,
        ansatz_k,
        dvec,
        y_max: Some(1.0),
        n: Some(4000),
        stretch: 1.008,
        horizon: APPROACH_FRACTION * tau0,
        cadence: APPROACH_FRACTION * tau0 / APPROACH_SAMPLES as f64,
        diagnostics: false,
        escape_sup: f64::MAX,
        ..SimConfig::default()
    }
}

pub const FINAL_PROFILE_S_INIT: f64 = 50.0;
/// Self-similar time span over which the scanned decade must form.
pub const FINAL_PROFILE_SPAN: f64 = 14.0;
/// Best amplitudes of the `ansatz_k = 5` search at `s0 = 50`, `A = 20`
/// (trapped over the whole horizon of 20).
pub const TRAPPED_DVEC_WIDE: [f64; 2] = [-0.0070534687, -0.0037953216];

/// Samples per pass toward the blowup time.
const APPROACH_SAMPLES: usize = 50;
/// Each pass covers this fraction of the estimated remaining time.
const APPROACH_FRACTION: f64 = 0.9;
const MAX_PASSES: usize = 200;

/// `u r^2 / |log r|^{1/l}` over a decade of radii, from a physical run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalProfileScan {
    pub t_blow: f64,
    pub t_late: f64,
    pub passes: usize,
    pub r: Vec<f64>,
    pub scaled: Vec<f64>,
    pub constant: f64,
}

/// Radius beyond which the profile at `T - t = tau` is in its tail:
/// ten times the transition point `xi = c^{-1/2l}`, in physical units.
pub fn tail_radius(p: &ProfileParams, tau: f64) -> f64 {
    let l = p.dim.ell_f64();
    10.0 * p.c.powf(-0.5 / l) * tau.sqrt() * tau.ln().abs().powf(0.5 / l)
}

/// Runs toward blowup in passes, re-estimating `T` from `1/sup w` after each,
/// until the tail reaches inside `[r_lo, 10 r_lo]`, then samples the scaled
/// final profile on that decade.
pub fn final_profile_scan(cfg: &SimConfig, r_lo: f64) -> Result<FinalProfileScan> {
    if !(r_lo > 0.0 && 10.0 * r_lo < 1.0) {
        return Err(Error::Argument(format!("decade start {r_lo} must lie in (0, 0.1)")));
    }
    let p = ProfileParams::new(cfg.d)?;
    let mut pass = cfg.clone();
    let mut traj = run(&pass)?;
    let mut samples = traj.physical.clone();
    let mut passes = 1;
    let t_blow = loop {
        let t: Vec<f64> = samples.iter().map(|x| x.t).collect();
        let sup: Vec<f64> = samples.iter().map(|x| x.sup_w).collect();
        let est = estimate_blowup_time(&t, &sup, APPROACH_SAMPLES.min(t.len()))?;
        let now = traj.final_state.time;
        let tau = est.t_blow - now;
        if !(tau > 0.0) {
            return Err(Error::Unfit(format!("estimated blowup time {} is already past", est.t_blow)));
        }
        if tail_radius(&p, tau) <= r_lo || traj.stop != StopReason::Horizon {
            break est.t_blow;
        }
        if passes == MAX_PASSES {
            return Err(Error::Unfit(format!("tail still outside r = {r_lo} after {passes} passes")));
        }
        pass.horizon = APPROACH_FRACTION * tau;
        pass.cadence = pass.horizon / APPROACH_SAMPLES as f64;
        let next = crate::sim::run_from(&pass, traj.final_state.clone())?;
        // the first sample repeats the previous end
        samples.extend(next.physical.iter().skip(1).copied());
        traj = next;
        passes += 1;
    };
    let st = &traj.final_state;
    let tau = t_blow - st.time;
    if tail_radius(&p, tau) > r_lo {
        return Err(Error::Unfit(format!(
            "run stopped ({}) with the tail at r = {:.2e}, outside the decade from {r_lo:.2e}",
            traj.stop,
            tail_radius(&p, tau)
        )));
    }
    let l = cfg.d.ell_f64();
    let u = transform(st, cfg.d.d_f64(), crate::sim::Representation::U);
    let (mut r, mut scaled) = (Vec::new(), Vec::new());
    for (x, w) in u.nodes.iter().zip(&u.values) {
        if *x >= r_lo && *x <= 10.0 * r_lo {
            r.push(*x);
            scaled.push(w * x * x / x.ln().abs().powf(1.0 / l));
        }
    }
    Ok(FinalProfileScan {
        t_blow,
        t_late: st.time,
        passes,
        r,
        scaled,
        constant: p.final_profile_constant(),
    })
}

fn final_profile_outcome(ansatz_k: f64, dvec: Vec<f64>) -> Result<Outcome> {
    let mut o = Outcome::new(11, "", None);
    let dim = Dim::Four;
    let p = ProfileParams::new(dim)?;
    let r_lo = tail_radius(&p, (-(FINAL_PROFILE_S_INIT + FINAL_PROFILE_SPAN)).exp());
    let scan = final_profile_scan(&final_profile_config(dim, ansatz_k, dvec), r_lo)?;
    let (lo, hi) = scan
        .scaled
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let mean = scan.scaled.iter().sum::<f64>() / scan.scaled.len() as f64;
    let spread = (hi - lo) / mean;
    o.metric("spread", spread);
    o.metric("mean_over_constant", mean / scan.constant);
    o.metric("t_blow", scan.t_blow);
    o.check(spread <= 0.5, format!("spread {:.0}% over the decade", 100.0 * spread));
    o.check(
        lo >= 0.5 * scan.constant && hi <= 2.0 * scan.constant,
        format!("values [{lo:.3}, {hi:.3}] vs constant {:.3}", scan.constant),
    );
    o.note(format!(
        "d={dim}, r in [{:.2e}, {:.2e}], scaled/constant in [{:.2}, {:.2}], {} passes",
        scan.r.first().copied().unwrap_or(f64::NAN),
        scan.r.last().copied().unwrap_or(f64::NAN),
        lo / scan.constant,
        hi / scan.constant,
        scan.passes
    ));
    Ok(o)
}

fn criterion_final_profile(opts: &VerifyOptions) -> Result<Vec<Outcome>> {
    let mut out = vec![final_profile_outcome(1.0, Vec::new())?];
    if opts.variants {
        out.push(variant(11, format!("final-profile scaling, ansatz_k={WIDE_CUTOFF}"), || {
            final_profile_outcome(WIDE_CUTOFF, TRAPPED_DVEC_WIDE.to_vec())
        }));
    }
    Ok(out)
}
