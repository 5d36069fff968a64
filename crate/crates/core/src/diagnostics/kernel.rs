//! Heat kernel of `L_eta = Delta - eta z . grad` on `R^d`.

use crate::error::{Error, Result};

/// `e^{s L_eta}(z, xi)`: a Gaussian in `xi` centred at `z e^{-s/2}` with
/// variance `(1 - e^{-s}) / eta` per coordinate, normalized to unit mass.
pub fn semigroup_kernel(eta: f64, s: f64, z: &[f64], xi: &[f64]) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Argument(format!("kernel time must be positive, got {s}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Argument(format!("eta must be positive, got {eta}")));
    }
    if z.len() != xi.len() || z.is_empty() {
        return Err(Error::Argument("z and xi must be points of the same R^d".into()));
    }
    let d = z.len() as f64;
    let a = -(-s).exp_m1();
    let shrink = (-0.5 * s).exp();
    let dist2: f64 = z.iter().zip(xi).map(|(z, x)| (z * shrink - x).powi(2)).sum();
    Ok((eta / (2.0 * std::f64::consts::PI * a)).powf(0.5 * d) * (-0.5 * eta * dist2 / a).exp())
}
