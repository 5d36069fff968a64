//! Time-series checks: mode ODE residuals and energy inequalities.

use serde::{Deserialize, Serialize};

use crate::dimension::Dim;
use crate::error::{Error, Result};

/// Least-squares slope of `log |y|` against `log x`, skipping zeros.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(x, y)| **x > 0.0 && y.abs() > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Unfit(format!("{} usable points for a log-log fit", pts.len())));
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Unfit("all abscissae coincide".into()));
    }
    Ok(pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum::<f64>() / sxx)
}

/// Second-order finite-difference derivative of a uniformly sampled series.
pub fn derivative_uniform(s: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let n = s.len();
    if n < 3 || f.len() != n {
        return Err(Error::Unfit("need at least three samples".into()));
    }
    let h = (s[n - 1] - s[0]) / (n - 1) as f64;
    if !(h > 0.0) || s.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
        return Err(Error::Unfit("series is not uniformly sampled".into()));
    }
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResiduals {
    pub s: Vec<f64>,
    /// `r[k][i]` at `s[i]`.
    pub r: Vec<Vec<f64>>,
    /// Log-log decay slope of `|r_k|`; `None` when it cannot be fitted.
    pub slopes: Vec<Option<f64>>,
}

/// `r_k = eps_k' - (1 - k/l) eps_k` for `k != l` and
/// `r_l = eps_l' + (2/s) eps_l`. `eps[k][i]` is mode `k` at `s[i]`.
pub fn mode_ode_residuals(dim: Dim, s: &[f64], eps: &[Vec<f64>]) -> Result<ModeResiduals> {
    if s.len() < 5 {
        return Err(Error::Unfit(format!("{} samples; at least 5 are needed", s.len())));
    }
    let l = dim.ell() as usize;
    let mut r = Vec::with_capacity(eps.len());
    let mut slopes = Vec::with_capacity(eps.len());
    for (k, e) in eps.iter().enumerate() {
        let de = derivative_uniform(s, e)?;
        let rk: Vec<f64> = if k == l {
            de.iter().zip(e).zip(s).map(|((d, e), s)| d + 2.0 / s * e).collect()
        } else {
            let rate = 1.0 - k as f64 / l as f64;
            de.iter().zip(e).map(|(d, e)| d - rate * e).collect()
        };
        slopes.push(fit_loglog_slope(s, &rk).ok());
        r.push(rk);
    }
    Ok(ModeResiduals {
        s: s.to_vec(),
        r,
        slopes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Decay rate in the flat-norm inequalities.
    pub delta_mid: f64,
    /// Safety factor on the constants calibrated from the first slice.
    pub margin: f64,
    /// Leading fraction of slices treated as transient.
    pub transient: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            delta_mid: 0.1,
            margin: 2.0,
            transient: 0.01,
        }
    }
}

/// Both sides of one energy inequality along a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySeries {
    pub name: String,
    pub constant: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Violations after the transient.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMonitor {
    pub s: Vec<f64>,
    /// The L2_rho inequality followed by the three flat-norm ones.
    pub series: Vec<InequalitySeries>,
}

impl EnergyMonitor {
    pub fn violations(&self) -> usize {
        self.series.iter().map(|x| x.violations).sum()
    }
}

/// Evaluates `d/ds N^2 <= -delta N^2 + C F(s)` for the `L2_rho` norm of the
/// remainder (`delta = 1/2`, `F = s^-6`) and the flat norms `j = 0, 1, 2`
/// (`F = s^{-2-3/l}` plus the lower flat norms squared). `C` is fixed from
/// the first slice as `margin * (|lhs| + delta N^2) / F`.
pub fn energy_monitors(
    dim: Dim,
    s: &[f64],
    tilde_l2rho: &[f64],
    flat: &[[f64; 3]],
    cfg: MonitorConfig,
) -> Result<EnergyMonitor> {
    let n = s.len();
    if tilde_l2rho.len() != n || flat.len() != n {
        return Err(Error::Argument("monitor series differ in length".into()));
    }
    let l = dim.ell_f64();
    let skip = ((n as f64) * cfg.transient).ceil() as usize;
    let mut series = Vec::with_capacity(4);

    let mut push = |name: &str, norm: Vec<f64>, delta: f64, forcing: Vec<f64>| -> Result<()> {
        let sq: Vec<f64> = norm.iter().map(|x| x * x).collect();
        let lhs = derivative_uniform(s, &sq)?;
        let c = if forcing[0] > 0.0 {
            cfg.margin * (lhs[0].abs() + delta * sq[0]) / forcing[0]
        } else {
            0.0
        };
        let rhs: Vec<f64> = sq.iter().zip(&forcing).map(|(q, f)| -delta * q + c * f).collect();
        let violations = lhs.iter().zip(&rhs).skip(skip).filter(|(a, b)| a > b).count();
        series.push(InequalitySeries {
            name: name.to_string(),
            constant: c,
            lhs,
            rhs,
            violations,
        });
        Ok(())
    };

    push(
        "l2rho",
        tilde_l2rho.to_vec(),
        0.5,
        s.iter().map(|s| s.powi(-6)).collect(),
    )?;
    let base: Vec<f64> = s.iter().map(|s| s.powf(-2.0 - 3.0 / l)).collect();
    let sq = |j: usize| flat.iter().map(|f| f[j] * f[j]).collect::<Vec<_>>();
    let (f0, f1) = (sq(0), sq(1));
    push("flat0", flat.iter().map(|f| f[0]).collect(), cfg.delta_mid, base.clone())?;
    push(
        "flat1",
        flat.iter().map(|f| f[1]).collect(),
        cfg.delta_mid,
        base.iter().zip(&f0).map(|(b, a)| b + a).collect(),
    )?;
    push(
        "flat2",
        flat.iter().map(|f| f[2]).collect(),
        cfg.delta_mid,
        base.iter().zip(&f0).zip(&f1).map(|((b, a), c)| b + a + c).collect(),
    )?;
    Ok(EnergyMonitor {
        s: s.to_vec(),
        series,
    })
}
