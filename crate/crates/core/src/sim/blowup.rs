//! Blowup-time estimation from a physical-frame history.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t_blow: f64,
    /// Two standard errors of the intercept.
    pub width: f64,
    pub slope: f64,
    pub points: usize,
}

/// Fits `1 / sup w = a + b t` over the last `window` samples and returns the
/// zero `T = -a / b` of the fitted line.
pub fn estimate_blowup_time(times: &[f64], sup_w: &[f64], window: usize) -> Result<BlowupEstimate> {
    if times.len() != sup_w.len() {
        return Err(Error::Argument("times and values differ in length".into()));
    }
    if window < 2 || times.len() < window {
        return Err(Error::Unfit(format!(
            "need a window of at least 2 samples, have {} of {window}",
            times.len()
        )));
    }
    let start = times.len() - window;
    let (t, u) = (&times[start..], &sup_w[start..]);
    if u.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Unfit("sup w must be finite and positive".into()));
    }
    if !u.windows(2).all(|p| p[1] > p[0]) || !t.windows(2).all(|p| p[1] > p[0]) {
        return Err(Error::Unfit("sup w is not increasing over the fit window".into()));
    }
    let y: Vec<f64> = u.iter().map(|x| 1.0 / x).collect();
    let n = window as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    let sty: f64 = t.iter().zip(&y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let b = sty / stt;
    let a = ym - b * tm;
    if !(b < 0.0) {
        return Err(Error::Unfit("1 / sup w is not decreasing".into()));
    }
    let t_blow = -a / b;
    let width = if window > 2 {
        let rss: f64 = t.iter().zip(&y).map(|(x, v)| (v - a - b * x).powi(2)).sum();
        let sigma2 = rss / (n - 2.0);
        // delta method on T = -a/b: dT = -(1/b) (dy at T)
        let var_pred = sigma2 * (1.0 / n + (t_blow - tm).powi(2) / stt);
        2.0 * var_pred.sqrt() / b.abs()
    } else {
        f64::NAN
    };
    Ok(BlowupEstimate {
        t_blow,
        width,
        slope: b,
        points: window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_reciprocal_data() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.018).collect();
        let u: Vec<f64> = t.iter().map(|t| 1.0 / (1.0 - t)).collect();
        let e = estimate_blowup_time(&t, &u, 20).unwrap();
        assert!((e.t_blow - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_monotone() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let u = [1.0, 2.0, 1.5, 3.0];
        assert!(matches!(estimate_blowup_time(&t, &u, 4), Err(Error::Unfit(_))));
    }
}
