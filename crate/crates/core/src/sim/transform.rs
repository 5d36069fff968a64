//! Changes of unknown (`v`, `w`, `m`, `u`) and of frame.
//!
//! `w = d v + y v'` is the density, `m = y^d v` the partial mass (up to the
//! surface factor). In the self-similar frame `u(r, t) = w(y, s) / (T - t)`
//! with `y = r / sqrt(T - t)` and `s = -log(T - t)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::scheme::{Frame, RadialState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    U,
    W,
    M,
    V,
}

/// Nodal values with their coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn w_from_v(grid: &Grid, v: &[f64], d: f64) -> Vec<f64> {
    grid.euler(v).iter().zip(v).map(|(yv, v)| d * v + yv).collect()
}

pub fn m_from_v(grid: &Grid, v: &[f64], d: f64) -> Vec<f64> {
    grid.nodes().iter().zip(v).map(|(y, v)| y.powf(d) * v).collect()
}

pub fn v_from_m(grid: &Grid, m: &[f64], d: f64, v0: f64) -> Vec<f64> {
    grid.nodes()
        .iter()
        .zip(m)
        .map(|(&y, m)| if y == 0.0 { v0 } else { m / y.powf(d) })
        .collect()
}

/// `m(y) = int_0^y w x^{d-1} dx` by the cumulative trapezoid rule.
pub fn m_from_w(grid: &Grid, w: &[f64], d: f64) -> Vec<f64> {
    let y = grid.nodes();
    let mut m = vec![0.0; y.len()];
    for i in 1..y.len() {
        let f0 = w[i - 1] * y[i - 1].powf(d - 1.0);
        let f1 = w[i] * y[i].powf(d - 1.0);
        m[i] = m[i - 1] + 0.5 * (y[i] - y[i - 1]) * (f0 + f1);
    }
    m
}

/// Inverse of [`w_from_v`] by cumulative quadrature; `v(0) = w(0) / d`.
pub fn v_from_w(grid: &Grid, w: &[f64], d: f64) -> Vec<f64> {
    let m = m_from_w(grid, w, d);
    v_from_m(grid, &m, d, w[0] / d)
}

/// Converts `state` to the requested unknown. `u` is returned on physical
/// radii at the state's physical time; for a self-similar state this takes
/// `T - t = e^{-s}`.
pub fn transform(state: &RadialState, d: f64, to: Representation) -> Field {
    let nodes = state.grid.nodes().to_vec();
    let v = &state.values;
    let values = match to {
        Representation::V => v.clone(),
        Representation::W => w_from_v(&state.grid, v, d),
        Representation::M => m_from_v(&state.grid, v, d),
        Representation::U => {
            let w = w_from_v(&state.grid, v, d);
            if state.frame == Frame::SelfSimilar {
                let s = state.time;
                let nodes = nodes.iter().map(|y| y * (-0.5 * s).exp()).collect();
                return Field {
                    nodes,
                    values: w.iter().map(|w| w * s.exp()).collect(),
                };
            }
            w
        }
    };
    Field { nodes, values }
}

/// Self-similar state at `s` to the physical frame with blowup time `t_blow`:
/// `v_phys(r, t) = e^{s} v(r e^{s/2}, s)`, `t = T - e^{-s}`.
pub fn to_physical(state: &RadialState, t_blow: f64) -> Result<RadialState> {
    if state.frame != Frame::SelfSimilar {
        return Err(Error::Argument("expected a self-similar state".into()));
    }
    let s = state.time;
    let scale = (-0.5 * s).exp();
    let nodes: Vec<f64> = state.grid.nodes().iter().map(|y| y * scale).collect();
    let grid = Arc::new(Grid::from_nodes(nodes)?);
    let values = state.values.iter().map(|v| v * s.exp()).collect();
    RadialState::new(Frame::Physical, t_blow - (-s).exp(), grid, values)
}

/// Physical state at `t < T` to self-similar variables.
pub fn to_selfsimilar(state: &RadialState, t_blow: f64) -> Result<RadialState> {
    if state.frame != Frame::Physical {
        return Err(Error::Argument("expected a physical state".into()));
    }
    let tau = t_blow - state.time;
    if !(tau > 0.0) {
        return Err(Error::Argument(format!(
            "time {} is not before the blowup time {t_blow}",
            state.time
        )));
    }
    let nodes: Vec<f64> = state.grid.nodes().iter().map(|r| r / tau.sqrt()).collect();
    let grid = Arc::new(Grid::from_nodes(nodes)?);
    let values = state.values.iter().map(|v| v * tau).collect();
    RadialState::new(Frame::SelfSimilar, -tau.ln(), grid, values)
}
