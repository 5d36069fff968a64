//! Initial fields.

use std::sync::Arc;

use super::config::{InitSpec, SimConfig};
use super::grid::Grid;
use super::scheme::{Frame, RadialState};
use crate::error::{Error, Result};
use crate::profile::Profile;

/// `Psi(y, s) + (A / s^2) sum_i d_i varphi_2i(y) chi(y s^{-1/2l})` with the
/// profile's cutoff.
pub fn perturbed_profile(profile: &Profile, a: f64, dvec: &[f64], y: f64, s: f64) -> Result<f64> {
    let mut v = profile.psi(y, s)?;
    let chi = profile.cutoff.chi(profile.xi(y, s));
    if chi != 0.0 {
        let pert: f64 = dvec
            .iter()
            .enumerate()
            .filter(|(_, d)| **d != 0.0)
            .map(|(i, d)| d * profile.varphi(i).eval(y))
            .sum();
        v += a / (s * s) * pert * chi;
    }
    Ok(v)
}

/// Samples the configured initial field on the configured grid.
pub fn make_initial_data(cfg: &SimConfig) -> Result<RadialState> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    make_initial_data_on(cfg, grid)
}

pub fn make_initial_data_on(cfg: &SimConfig, grid: Arc<Grid>) -> Result<RadialState> {
    let time = cfg.start_time();
    match cfg.init_spec()? {
        InitSpec::Constant(c) => RadialState::from_fn(cfg.frame, time, grid, |_| c),
        InitSpec::Profile => {
            let profile = cfg.profile()?;
            let dvec = cfg.dvec_padded();
            let l = cfg.d.ell_f64();
            match cfg.frame {
                Frame::SelfSimilar => {
                    let s = cfg.s0;
                    let support = 2.0 * profile.cutoff.k * s.powf(1.0 / (2.0 * l));
                    if grid.y_max() < support {
                        return Err(Error::Config(format!(
                            "grid ends at {} inside the perturbation support {support}",
                            grid.y_max()
                        )));
                    }
                    let values = grid
                        .nodes()
                        .iter()
                        .map(|&y| perturbed_profile(&profile, cfg.a, &dvec, y, s))
                        .collect::<Result<Vec<_>>>()?;
                    RadialState::new(Frame::SelfSimilar, s, grid, values)
                }
                Frame::Physical => {
                    // v(r, t0) = e^{s} v_ss(r e^{s/2}, s) with T - t0 = e^{-s}
                    let s = cfg.s_init;
                    let (amp, stretch) = (s.exp(), (0.5 * s).exp());
                    let support = 2.0 * profile.cutoff.k * s.powf(1.0 / (2.0 * l)) / stretch;
                    if !cfg.dvec.iter().all(|d| *d == 0.0) && grid.y_max() < support {
                        return Err(Error::Config(format!(
                            "grid ends at {} inside the perturbation support {support}",
                            grid.y_max()
                        )));
                    }
                    let values = grid
                        .nodes()
                        .iter()
                        .map(|&r| Ok(amp * perturbed_profile(&profile, cfg.a, &dvec, r * stretch, s)?))
                        .collect::<Result<Vec<_>>>()?;
                    RadialState::new(Frame::Physical, cfg.t0, grid, values)
                }
            }
        }
    }
}
