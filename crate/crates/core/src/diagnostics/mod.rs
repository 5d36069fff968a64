//! Measurements of the bootstrap quantities on grid fields: mode projections,
//! the weighted `flat` norm, outer sup-norms and the shrinking-set test.

pub mod kernel;
pub mod monitors;
pub mod spectrum;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dimension::Dim;
use crate::eigenbasis::{self, rat_to_f64, EigenSystem, RealPoly};
use crate::error::{Error, Result};
use crate::profile::{CutoffSpec, Profile};
use crate::sim::{Frame, Grid, RadialState};

pub use kernel::semigroup_kernel;
pub use monitors::{energy_monitors, fit_loglog_slope, mode_ode_residuals, EnergyMonitor, ModeResiduals};
pub use spectrum::{discrete_spectrum, discrete_spectrum_dense, discrete_spectrum_full, Spectrum};

/// Truncation threshold for `rho <y>^{8l}` in the quadrature.
pub const RHO_TRUNCATION: f64 = 1e-30;
/// Required smallness of `e^{-Y^2/4l} Y^{d+1+4l}` at the grid end.
pub const COVERAGE_TOL: f64 = 1e-10;

/// Bound parameters of the shrinking set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Half-width of the "boundary" band around ratio 1.
    pub band: f64,
    /// Constant of the pointwise bound.
    pub pointwise_c: f64,
}

impl BoundParams {
    pub fn new(a: f64, k: f64) -> Self {
        Self {
            a,
            k,
            band: 0.05,
            pointwise_c: 1.0,
        }
    }
}

/// Which bound of the shrinking set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// `|eps_k| <= A s^-2` (or `A^2 s^-2 log s` for `k = l`).
    Mode(usize),
    TildeL2Rho,
    Flat(usize),
    /// `||eps_ex||_inf`
    OutSup,
    /// `||y eps_ex||_inf`
    OutYSup,
    /// `||y d_y eps_ex||_inf`
    OutDySup,
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundId::Mode(k) => write!(f, "eps{k}"),
            BoundId::TildeL2Rho => write!(f, "tilde_l2rho"),
            BoundId::Flat(j) => write!(f, "flat{j}"),
            BoundId::OutSup => write!(f, "out_sup"),
            BoundId::OutYSup => write!(f, "out_ysup"),
            BoundId::OutDySup => write!(f, "out_dysup"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "bound", rename_all = "lowercase")]
pub enum Verdict {
    Inside,
    Boundary(BoundId),
    Outside(BoundId),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Inside => write!(f, "inside"),
            Verdict::Boundary(b) => write!(f, "boundary:{b}"),
            Verdict::Outside(b) => write!(f, "outside:{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub bound: BoundId,
    pub value: f64,
    pub limit: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingReport {
    pub s: f64,
    pub params: BoundParams,
    pub slacks: Vec<Slack>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

impl ShrinkingReport {
    pub fn from_slacks(s: f64, params: BoundParams, slacks: Vec<Slack>, warnings: Vec<String>) -> Self {
        let worst = slacks
            .iter()
            .copied()
            .fold(None::<Slack>, |w, x| match w {
                Some(w) if w.ratio >= x.ratio => Some(w),
                _ => Some(x),
            });
        let verdict = match worst {
            Some(w) if w.ratio > 1.0 + params.band => Verdict::Outside(w.bound),
            Some(w) if w.ratio >= 1.0 - params.band => Verdict::Boundary(w.bound),
            _ => Verdict::Inside,
        };
        Self {
            s,
            params,
            slacks,
            verdict,
            warnings,
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.slacks.iter().map(|x| x.ratio).fold(0.0, f64::max)
    }

    pub fn ratio(&self, bound: BoundId) -> Option<f64> {
        self.slacks.iter().find(|x| x.bound == bound).map(|x| x.ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDecomposition {
    pub s: f64,
    /// Normalized projections `<eps_hat, varphi_2k>_rho / <varphi_2k, varphi_2k>_rho`.
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub tilde: Vec<f64>,
    pub tilde_l2rho: f64,
    pub flat: [f64; 3],
    /// `(||eps_ex||, ||y eps_ex||, ||y d_y eps_ex||)`.
    pub outer: [f64; 3],
    /// Worst ratio of the pointwise bound.
    pub pointwise: f64,
}

/// One row of the time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub s: f64,
    pub eps: Vec<f64>,
    pub tilde_l2rho: f64,
    pub flat: [f64; 3],
    pub out_sup: f64,
    pub out_ysup: f64,
    pub out_dysup: f64,
    pub verdict: Verdict,
    pub max_ratio: f64,
    pub pointwise: f64,
}

impl DiagnosticsRecord {
    pub fn new(dec: &ModeDecomposition, report: &ShrinkingReport) -> Self {
        Self {
            s: dec.s,
            eps: dec.coefficients.clone(),
            tilde_l2rho: dec.tilde_l2rho,
            flat: dec.flat,
            out_sup: dec.outer[0],
            out_ysup: dec.outer[1],
            out_dysup: dec.outer[2],
            verdict: report.verdict,
            max_ratio: report.max_ratio(),
            pointwise: dec.pointwise,
        }
    }

    pub fn csv_header(dim: Dim) -> Vec<String> {
        let mut h = vec!["s".to_string()];
        h.extend((0..2 * dim.ell() as usize).map(|k| format!("eps{k}")));
        h.extend(
            ["tilde_l2rho", "flat0", "flat1", "flat2", "out_sup", "out_ysup", "out_dysup", "verdict"]
                .iter()
                .map(|s| s.to_string()),
        );
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![self.s.to_string()];
        r.extend(self.eps.iter().map(|x| x.to_string()));
        r.push(self.tilde_l2rho.to_string());
        r.extend(self.flat.iter().map(|x| x.to_string()));
        r.push(self.out_sup.to_string());
        r.push(self.out_ysup.to_string());
        r.push(self.out_dysup.to_string());
        r.push(self.verdict.to_string());
        r
    }
}

/// Which cutoff multiplies the `flat` integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlatCutoff {
    /// `1 - chi_K(y)`.
    Smooth,
    /// Indicator of `y >= K`.
    Sharp,
}

/// Quadrature weights and mode tables for one grid and dimension.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    dim: Dim,
    grid: Arc<Grid>,
    profile: Profile,
    params: BoundParams,
    outer_cutoff: CutoffSpec,
    trap: Vec<f64>,
    rho_w: Vec<f64>,
    modes: Vec<Vec<f64>>,
    mode_norms: Vec<f64>,
}

impl Diagnostics {
    pub fn new(dim: Dim, grid: Arc<Grid>, params: BoundParams) -> Result<Self> {
        let profile = Profile::new(dim)?;
        Self::with_profile(profile, grid, params)
    }

    pub fn with_profile(profile: Profile, grid: Arc<Grid>, params: BoundParams) -> Result<Self> {
        let dim = profile.dim();
        let (d, l) = (dim.d_f64(), dim.ell_f64());
        let y_max = grid.y_max();
        let tail = (-y_max * y_max / (4.0 * l)).exp() * y_max.powf(d + 1.0 + 4.0 * l);
        if tail >= COVERAGE_TOL {
            return Err(Error::Coverage(format!(
                "rho-weighted tail at y = {y_max} is {tail:e}, above {COVERAGE_TOL:e}"
            )));
        }
        if !(params.a > 0.0 && params.k > 0.0) {
            return Err(Error::Argument("A and K must be positive".into()));
        }
        let trap = grid.trapezoid_weights();
        let rho_w = grid
            .nodes()
            .iter()
            .zip(&trap)
            .map(|(&y, w)| {
                let r = rho(dim, y);
                if r * (1.0 + y * y).powf(4.0 * l) < RHO_TRUNCATION {
                    0.0
                } else {
                    w * r
                }
            })
            .collect();
        let sys = EigenSystem::new(dim, 2 * dim.ell() as usize + 2);
        let mass = eigenbasis::rho_mass(dim);
        let count = 2 * dim.ell() as usize;
        let mut modes = Vec::with_capacity(count);
        let mut mode_norms = Vec::with_capacity(count);
        for k in 0..count {
            let p: RealPoly = profile.varphi(k);
            modes.push(grid.nodes().iter().map(|&y| p.eval(y)).collect());
            mode_norms.push(rat_to_f64(&sys.norm_rho(k)?) * mass);
        }
        Ok(Self {
            dim,
            grid,
            profile,
            params,
            outer_cutoff: CutoffSpec::new(params.k)?,
            trap,
            rho_w,
            modes,
            mode_norms,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn params(&self) -> BoundParams {
        self.params
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// `varphi_2k` at the grid nodes.
    pub fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k]
    }

    /// Absolute `<varphi_2k, varphi_2k>_rho`.
    pub fn mode_norm(&self, k: usize) -> f64 {
        self.mode_norms[k]
    }

    fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.grid.len() {
            return Err(Error::Argument(format!(
                "field has {} values on a grid of {} nodes",
                field.len(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// `<f, g>_rho` with `rho = y^{d+1} e^{-y^2/4l}` (not normalized).
    pub fn rho_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.rho_w.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    pub fn rho_norm(&self, f: &[f64]) -> f64 {
        self.rho_inner(f, f).max(0.0).sqrt()
    }

    /// Normalized projection of `field` on `varphi_2k`.
    pub fn mode_project(&self, field: &[f64], k: usize) -> Result<f64> {
        self.check_len(field)?;
        if k >= self.modes.len() {
            return Err(Error::Argument(format!(
                "mode {k} is outside the stored range 0..{}",
                self.modes.len()
            )));
        }
        Ok(self.rho_inner(field, &self.modes[k]) / self.mode_norms[k])
    }

    /// `(y d_y)^j field`.
    pub fn euler_power(&self, field: &[f64], j: usize) -> Vec<f64> {
        let mut g = field.to_vec();
        for _ in 0..j {
            g = self.grid.euler(&g);
        }
        g
    }

    /// `|| (y d_y)^j field ||_flat` with the smooth cutoff in `y`.
    pub fn flat_norm(&self, field: &[f64], j: usize) -> Result<f64> {
        self.flat_norm_with(field, j, FlatCutoff::Smooth)
    }

    pub fn flat_norm_with(&self, field: &[f64], j: usize, cutoff: FlatCutoff) -> Result<f64> {
        self.check_len(field)?;
        let g = self.euler_power(field, j);
        let p = 4.0 * self.dim.ell_f64() + 3.0;
        let k = self.params.k;
        let y = self.grid.nodes();
        let integrand: Vec<f64> = y
            .iter()
            .zip(&g)
            .map(|(&y, g)| {
                let w = match cutoff {
                    FlatCutoff::Smooth => 1.0 - self.outer_cutoff.chi(y),
                    FlatCutoff::Sharp => {
                        if y >= k {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                if w == 0.0 {
                    0.0
                } else {
                    w * g * g * y.powf(-p)
                }
            })
            .collect();
        let total: f64 = integrand.iter().zip(&self.trap).map(|(f, w)| f * w).sum();
        check_tail(y, &integrand, total)?;
        Ok(total.sqrt())
    }

    /// `(||eps_ex||, ||y eps_ex||, ||y d_y eps_ex||)` with
    /// `eps_ex = eps (1 - chi_K(xi))`.
    pub fn outer_norms(&self, eps: &[f64], s: f64) -> Result<[f64; 3]> {
        self.check_len(eps)?;
        let l = self.dim.ell_f64();
        let scale = s.powf(-1.0 / (2.0 * l));
        let need = 2.0 * self.params.k / scale;
        if self.grid.y_max() < need * (1.0 - 1e-12) {
            return Err(Error::Coverage(format!(
                "outer norms need the grid to reach 2 K s^(1/2l) = {need}, it ends at {}",
                self.grid.y_max()
            )));
        }
        let ex: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(eps)
            .map(|(&y, e)| e * (1.0 - self.outer_cutoff.chi(y * scale)))
            .collect();
        let dex = self.grid.euler(&ex);
        let sup = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, |m, x| m.max(x.abs()));
        Ok([
            sup(&mut ex.iter().copied()),
            sup(&mut ex.iter().zip(self.grid.nodes()).map(|(e, y)| e * y)),
            sup(&mut dex.iter().copied()),
        ])
    }

    /// Worst ratio of `|e| + |y e'|` against `C A^3 s^{-1-3/2l} <y>^{2l+1}`.
    pub fn pointwise_bound_check(&self, eps_hat: &[f64], s: f64) -> Result<(bool, f64)> {
        self.check_len(eps_hat)?;
        let l = self.dim.ell_f64();
        let amp = self.params.pointwise_c * self.params.a.powi(3) * s.powf(-1.0 - 3.0 / (2.0 * l));
        let de = self.grid.euler(eps_hat);
        let ratio = self
            .grid
            .nodes()
            .iter()
            .zip(eps_hat)
            .zip(&de)
            .map(|((&y, e), d)| (e.abs() + d.abs()) / (amp * (1.0 + y * y).powf(l + 0.5)))
            .fold(0.0f64, f64::max);
        Ok((ratio <= 1.0, ratio))
    }

    /// `Psi(., s)` on the grid.
    pub fn ansatz(&self, s: f64) -> Result<Vec<f64>> {
        self.grid.nodes().iter().map(|&y| self.profile.psi(y, s)).collect()
    }

    /// Decomposes `v` at time `s` around `Psi`.
    pub fn decompose(&self, v: &[f64], s: f64) -> Result<(ModeDecomposition, ShrinkingReport)> {
        self.check_len(v)?;
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::Argument(format!("self-similar time must exceed 1, got {s}")));
        }
        let nodes = self.grid.nodes();
        let mut eps_hat = Vec::with_capacity(v.len());
        let mut eps = Vec::with_capacity(v.len());
        for (&y, &vi) in nodes.iter().zip(v) {
            let q = self.profile.q_jet(y, s)?.v;
            let ph = self.profile.psi_hat(y, s)?;
            eps_hat.push(vi - q - ph);
            eps.push(vi - q);
        }
        let coefficients = (0..self.modes.len())
            .map(|k| self.mode_project(&eps_hat, k))
            .collect::<Result<Vec<_>>>()?;
        let mut tilde = eps_hat.clone();
        for (c, m) in coefficients.iter().zip(&self.modes) {
            for (t, p) in tilde.iter_mut().zip(m) {
                *t -= c * p;
            }
        }
        let tilde_l2rho = self.rho_norm(&tilde);
        let flat = [
            self.flat_norm(&eps_hat, 0)?,
            self.flat_norm(&eps_hat, 1)?,
            self.flat_norm(&eps_hat, 2)?,
        ];
        let outer = self.outer_norms(&eps, s)?;
        let (_, pointwise) = self.pointwise_bound_check(&eps_hat, s)?;
        let dec = ModeDecomposition {
            s,
            coefficients,
            tilde,
            tilde_l2rho,
            flat,
            outer,
            pointwise,
        };
        let report = self.report(&dec);
        Ok((dec, report))
    }

    pub fn decompose_state(&self, state: &RadialState) -> Result<(ModeDecomposition, ShrinkingReport)> {
        if state.frame != Frame::SelfSimilar {
            return Err(Error::Argument("decomposition needs a self-similar state".into()));
        }
        if !Arc::ptr_eq(&state.grid, &self.grid) && *state.grid != *self.grid {
            return Err(Error::Argument("state grid differs from the diagnostics grid".into()));
        }
        self.decompose(&state.values, state.time)
    }

    /// Bound values of the shrinking set at time `s`.
    pub fn limits(&self, s: f64) -> Vec<(BoundId, f64)> {
        let l = self.dim.ell() as usize;
        let lf = l as f64;
        let a = self.params.a;
        let mut out = Vec::new();
        for k in 0..2 * l {
            let lim = if k == l { a * a * s.ln() / (s * s) } else { a / (s * s) };
            out.push((BoundId::Mode(k), lim));
        }
        out.push((BoundId::TildeL2Rho, a * s.powi(-3)));
        for j in 0..3 {
            out.push((BoundId::Flat(j), a.powi(1 + j as i32) * s.powf(-1.0 - 3.0 / (2.0 * lf))));
        }
        out.push((BoundId::OutSup, a.powi(4) * s.powf(-1.0 / lf)));
        out.push((BoundId::OutYSup, a.powi(4) * s.powf(-1.0 / (2.0 * lf))));
        out.push((BoundId::OutDySup, a.powi(5) * s.powf(-1.0 / lf)));
        out
    }

    pub fn report(&self, dec: &ModeDecomposition) -> ShrinkingReport {
        let values = |b: BoundId| match b {
            BoundId::Mode(k) => dec.coefficients[k].abs(),
            BoundId::TildeL2Rho => dec.tilde_l2rho,
            BoundId::Flat(j) => dec.flat[j],
            BoundId::OutSup => dec.outer[0],
            BoundId::OutYSup => dec.outer[1],
            BoundId::OutDySup => dec.outer[2],
        };
        let slacks = self
            .limits(dec.s)
            .into_iter()
            .map(|(b, lim)| {
                let value = values(b);
                Slack {
                    bound: b,
                    value,
                    limit: lim,
                    ratio: value / lim,
                }
            })
            .collect();
        let mut warnings = Vec::new();
        let k = self.params.k;
        let resolved = self.grid.nodes().iter().filter(|&&y| y >= k && y <= 2.0 * k).count();
        if resolved < 20 {
            warnings.push(format!(
                "only {resolved} nodes in the flat-norm cutoff layer [K, 2K]; derivatives may be unresolved"
            ));
        }
        ShrinkingReport::from_slacks(dec.s, self.params, slacks, warnings)
    }
}

/// `y^{d+1} e^{-y^2/(4l)}`.
pub fn rho(dim: Dim, y: f64) -> f64 {
    y.powi(dim.d() as i32 + 1) * (-y * y / (4.0 * dim.ell_f64())).exp()
}

/// Rejects integrands whose envelope does not decay between the middle of
/// the grid and 90% of its extent (the last cells can hold a
/// boundary layer) while carrying a non-negligible part of the integral.
/// Window maxima stand in for point values so isolated zeros do not count.
fn check_tail(y: &[f64], f: &[f64], total: f64) -> Result<()> {
    let n = y.len() - 1;
    let peak = |lo: usize, hi: usize| {
        (lo..=hi)
            .map(|i| (i, f[i].abs()))
            .fold((lo, 0.0f64), |m, x| if x.1 > m.1 { x } else { m })
    };
    let (m, fa) = peak(n / 2, 3 * n / 5);
    let (q, fb) = peak(4 * n / 5, 9 * n / 10);
    if fa == 0.0 || fb == 0.0 || fb * y[q] <= 1e-3 * total {
        return Ok(());
    }
    let slope = (fb / fa).ln() / (y[q] / y[m]).ln();
    if slope >= 0.0 {
        return Err(Error::Coverage(format!(
            "flat-norm integrand grows like y^{slope:.2} at the grid end: non-integrable tail"
        )));
    }
    Ok(())
}
