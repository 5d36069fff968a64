//! Spatial discretization of the radial partial-mass equations and the IMEX
//! time integrator.
//!
//! The radial Laplacian `Delta_{d+2}` is treated by Crank-Nicolson; drift and
//! reaction are explicit with second-order Adams-Bashforth (forward Euler on
//! the first step), so the scheme is second order in time. The drift uses
//! centered differences where the cell Peclet number `|a| h / 2` is at most 1
//! and first-order upwinding elsewhere.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::dimension::Dim;
use crate::error::{Error, Result};
use crate::profile::ProfileParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// `d_s v = Delta_{d+2} v - y v'/2 - v + d v^2 + y v v'`.
    SelfSimilar,
    /// `d_t v = Delta_{d+2} v + d v^2 + r v v'`.
    Physical,
}

impl std::str::FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "selfsimilar" | "self-similar" | "self_similar" => Ok(Frame::SelfSimilar),
            "physical" => Ok(Frame::Physical),
            other => Err(Error::Config(format!("unknown frame {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Boundary {
    /// Zero slope at the last node.
    Neumann,
    /// `v(Y) = Q(Y s^{-1/2l})`; self-similar frame only.
    Profile,
    /// Fixed value at the last node.
    Value { value: f64 },
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "neumann" => Ok(Boundary::Neumann),
            "profile" | "dirichlet" => Ok(Boundary::Profile),
            _ => match s.strip_prefix("value:") {
                Some(v) => v
                    .trim()
                    .parse()
                    .map(|value| Boundary::Value { value })
                    .map_err(|_| Error::Config(format!("bad boundary value in {s:?}"))),
                None => Err(Error::Config(format!("unknown boundary {s:?}"))),
            },
        }
    }
}

/// Field `v` on a radial grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub frame: Frame,
    /// `s` in the self-similar frame, `t` in the physical frame.
    pub time: f64,
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl RadialState {
    pub fn new(frame: Frame, time: f64, grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let st = Self {
            frame,
            time,
            grid,
            values,
        };
        st.check_finite()?;
        Ok(st)
    }

    pub fn from_fn(frame: Frame, time: f64, grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&y| f(y)).collect();
        Self::new(frame, time, grid, values)
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite(&self.grid, &self.values)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_finite(grid: &Grid, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(node) => Err(Error::StateCorruption {
            node,
            y: grid.nodes()[node],
        }),
        None => Ok(()),
    }
}

/// Discrete operators for one grid, dimension, frame and boundary choice.
#[derive(Debug, Clone)]
pub struct Scheme {
    grid: Arc<Grid>,
    dim: Dim,
    frame: Frame,
    boundary: Boundary,
    profile: Option<ProfileParams>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Scheme {
    pub fn new(grid: Arc<Grid>, dim: Dim, frame: Frame, boundary: Boundary) -> Result<Self> {
        let profile = match (frame, boundary) {
            (Frame::Physical, Boundary::Profile) => {
                return Err(Error::Config(
                    "profile-matched boundary is defined in the self-similar frame only".into(),
                ))
            }
            (_, Boundary::Profile) => Some(ProfileParams::new(dim)?),
            _ => None,
        };
        let n = grid.intervals();
        let y = grid.nodes();
        let nn = dim.d_f64() + 2.0;
        let (mut lower, mut diag, mut upper) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
        let h0 = y[1];
        diag[0] = -2.0 * nn / (h0 * h0);
        upper[0] = 2.0 * nn / (h0 * h0);
        for i in 1..n {
            let (hm, hp) = (y[i] - y[i - 1], y[i + 1] - y[i]);
            let s = hm + hp;
            let k = (nn - 1.0) / y[i];
            lower[i] = 2.0 / (hm * s) - k * hp / (hm * s);
            diag[i] = -2.0 / (hm * hp) + k * (hp - hm) / (hm * hp);
            upper[i] = 2.0 / (hp * s) + k * hm / (hp * s);
        }
        let hn = y[n] - y[n - 1];
        lower[n] = 2.0 / (hn * hn);
        diag[n] = -2.0 / (hn * hn);
        Ok(Self {
            grid,
            dim,
            frame,
            boundary,
            profile,
            lower,
            diag,
            upper,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn is_dirichlet(&self) -> bool {
        !matches!(self.boundary, Boundary::Neumann)
    }

    /// Boundary value at the given time for Dirichlet conditions.
    pub fn boundary_value(&self, time: f64) -> Result<Option<f64>> {
        match self.boundary {
            Boundary::Neumann => Ok(None),
            Boundary::Value { value } => Ok(Some(value)),
            Boundary::Profile => {
                let p = self.profile.as_ref().expect("profile params for profile boundary");
                let xi = self.grid.y_max() * time.powf(-1.0 / (2.0 * self.dim.ell_f64()));
                Ok(Some(p.q_of_xi(xi)?))
            }
        }
    }

    /// `Delta_{d+2} v`; the last node uses a mirror ghost (Neumann) or a
    /// quadratic extrapolation (Dirichlet).
    pub fn laplacian(&self, v: &[f64], out: &mut [f64]) {
        let n = self.grid.intervals();
        out[0] = self.diag[0] * v[0] + self.upper[0] * v[1];
        for i in 1..n {
            out[i] = self.lower[i] * v[i - 1] + self.diag[i] * v[i] + self.upper[i] * v[i + 1];
        }
        out[n] = if self.is_dirichlet() {
            let y = self.grid.nodes();
            let h = y[n] - y[n - 1];
            let ghost = 3.0 * v[n] - 3.0 * v[n - 1] + v[n - 2];
            let k = (self.dim.d_f64() + 1.0) / y[n];
            (ghost - 2.0 * v[n] + v[n - 1]) / (h * h) + k * (ghost - v[n - 1]) / (2.0 * h)
        } else {
            self.lower[n] * v[n - 1] + self.diag[n] * v[n]
        };
    }

    /// Drift speed `a` in `-a d_y v`.
    fn speed(&self, y: f64, v: f64) -> f64 {
        match self.frame {
            Frame::SelfSimilar => (0.5 - v) * y,
            Frame::Physical => -v * y,
        }
    }

    fn reaction(&self, v: f64) -> f64 {
        let d = self.dim.d_f64();
        match self.frame {
            Frame::SelfSimilar => -v + d * v * v,
            Frame::Physical => d * v * v,
        }
    }

    /// Drift and reaction terms.
    pub fn explicit(&self, v: &[f64], out: &mut [f64]) {
        let n = self.grid.intervals();
        let y = self.grid.nodes();
        out[0] = self.reaction(v[0]);
        for i in 1..=n {
            let a = self.speed(y[i], v[i]);
            let hm = y[i] - y[i - 1];
            let dv = if i == n {
                if self.is_dirichlet() {
                    (v[n] - v[n - 1]) / hm
                } else {
                    0.0
                }
            } else {
                let hp = y[i + 1] - y[i];
                if a.abs() * hm.max(hp) <= 2.0 {
                    (hm * hm * v[i + 1] + (hp * hp - hm * hm) * v[i] - hp * hp * v[i - 1])
                        / (hm * hp * (hm + hp))
                } else if a > 0.0 {
                    (v[i] - v[i - 1]) / hm
                } else {
                    (v[i + 1] - v[i]) / hp
                }
            };
            out[i] = -a * dv + self.reaction(v[i]);
        }
    }

    /// Full right-hand side on the grid.
    pub fn rhs(&self, state: &RadialState) -> Result<Vec<f64>> {
        if state.frame != self.frame {
            return Err(Error::Argument(format!(
                "state frame {:?} does not match scheme frame {:?}",
                state.frame, self.frame
            )));
        }
        state.check_finite()?;
        let m = state.values.len();
        let (mut a, mut b) = (vec![0.0; m], vec![0.0; m]);
        self.laplacian(&state.values, &mut a);
        self.explicit(&state.values, &mut b);
        Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    /// Largest step the explicit terms tolerate at Courant number `cfl`.
    pub fn explicit_dt_limit(&self, v: &[f64], cfl: f64) -> f64 {
        let y = self.grid.nodes();
        let n = self.grid.intervals();
        let mut lim = f64::INFINITY;
        for i in 1..=n {
            let a = self.speed(y[i], v[i]).abs();
            let h = (y[i] - y[i - 1]).min(if i < n { y[i + 1] - y[i] } else { f64::INFINITY });
            if a > 0.0 {
                lim = lim.min(cfl * h / a);
            }
        }
        // reaction rate |d r / d v|
        let d = self.dim.d_f64();
        let rate = v.iter().fold(0.0_f64, |m, &x| {
            let r = match self.frame {
                Frame::SelfSimilar => (2.0 * d * x - 1.0).abs(),
                Frame::Physical => (2.0 * d * x).abs(),
            };
            m.max(r)
        });
        if rate > 0.0 {
            lim = lim.min(cfl / rate);
        }
        lim
    }
}

/// Solves a tridiagonal system in place; `rhs` becomes the solution.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta.abs() < f64::MIN_POSITIVE {
        return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta.abs() < f64::MIN_POSITIVE || !beta.is_finite() {
            return Err(Error::Numerical(format!("zero pivot at row {i} in tridiagonal solve")));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Crank-Nicolson / Adams-Bashforth-2 stepper with its history.
#[derive(Debug, Clone)]
pub struct Integrator {
    scheme: Scheme,
    prev: Option<(Vec<f64>, f64)>,
    lap: Vec<f64>,
    expl: Vec<f64>,
}

impl Integrator {
    pub fn new(scheme: Scheme) -> Self {
        let m = scheme.grid.len();
        Self {
            scheme,
            prev: None,
            lap: vec![0.0; m],
            expl: vec![0.0; m],
        }
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Forget the multistep history (the next step is a one-step start).
    pub fn reset(&mut self) {
        self.prev = None;
    }

    /// Steps until `state.time == t_end`, each step at most `dt_max` and
    /// within `cfl` times the explicit limit. Returns the number of steps.
    pub fn advance_to(&mut self, state: &mut RadialState, t_end: f64, dt_max: f64, cfl: f64) -> Result<usize> {
        let mut steps = 0;
        while state.time < t_end {
            let lim = self.scheme.explicit_dt_limit(&state.values, cfl);
            let mut dt = dt_max.min(lim);
            let left = t_end - state.time;
            if dt >= left * (1.0 - 1e-9) {
                dt = left;
            } else if dt > 0.5 * left {
                dt = 0.5 * left;
            }
            self.step(state, dt)?;
            if t_end - state.time <= 1e-12 * t_end.abs().max(dt) {
                state.time = t_end;
            }
            steps += 1;
        }
        Ok(steps)
    }

    /// Advance `state` by `dt`.
    pub fn step(&mut self, state: &mut RadialState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if state.frame != self.scheme.frame {
            return Err(Error::Argument("state frame does not match the integrator".into()));
        }
        let limit = self.scheme.explicit_dt_limit(&state.values, 1.0);
        if dt > limit {
            return Err(Error::Config(format!(
                "time step {dt:e} violates the explicit stability limit {limit:e}"
            )));
        }
        let v = &state.values;
        let n = v.len() - 1;
        self.scheme.laplacian(v, &mut self.lap);
        self.scheme.explicit(v, &mut self.expl);

        let mut rhs = vec![0.0; n + 1];
        match &self.prev {
            Some((f_prev, dt_prev)) => {
                let w = dt / dt_prev;
                for i in 0..=n {
                    let e = (1.0 + 0.5 * w) * self.expl[i] - 0.5 * w * f_prev[i];
                    rhs[i] = v[i] + 0.5 * dt * self.lap[i] + dt * e;
                }
            }
            None => {
                for i in 0..=n {
                    rhs[i] = v[i] + 0.5 * dt * self.lap[i] + dt * self.expl[i];
                }
            }
        }
        let s = &self.scheme;
        let lower: Vec<f64> = s.lower.iter().map(|a| -0.5 * dt * a).collect();
        let upper: Vec<f64> = s.upper.iter().map(|c| -0.5 * dt * c).collect();
        let mut diag: Vec<f64> = s.diag.iter().map(|b| 1.0 - 0.5 * dt * b).collect();
        let mut lower = lower;
        if let Some(g) = s.boundary_value(state.time + dt)? {
            lower[n] = 0.0;
            diag[n] = 1.0;
            rhs[n] = g;
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs)?;
        check_finite(&s.grid, &rhs)?;

        let f_now = std::mem::take(&mut self.expl);
        self.expl = match self.prev.take() {
            Some((buf, _)) => buf,
            None => vec![0.0; n + 1],
        };
        self.prev = Some((f_now, dt));
        state.values = rhs;
        state.time += dt;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense() {
        let lower = [0.0, 1.0, 2.0, 1.0];
        let diag = [4.0, 5.0, 6.0, 4.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let mut b = [0.0; 4];
        for i in 0..4 {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += lower[i] * x[i - 1];
            }
            if i < 3 {
                b[i] += upper[i] * x[i + 1];
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let grid = Arc::new(Grid::geometric(60, 4.0, 1.02).unwrap());
        let s = Scheme::new(grid.clone(), Dim::Four, Frame::SelfSimilar, Boundary::Neumann).unwrap();
        let v: Vec<f64> = grid.nodes().iter().map(|y| 2.0 + y * y).collect();
        let mut out = vec![0.0; v.len()];
        s.laplacian(&v, &mut out);
        // Delta_6 y^2 = 2 * 6
        for (i, o) in out.iter().enumerate().take(v.len() - 1) {
            assert!((o - 12.0).abs() < 1e-8, "node {i}: {o}");
        }
    }

    #[test]
    fn parses_boundary_and_frame() {
        assert_eq!("neumann".parse::<Boundary>().unwrap(), Boundary::Neumann);
        assert_eq!("value:0.25".parse::<Boundary>().unwrap(), Boundary::Value { value: 0.25 });
        assert_eq!("self-similar".parse::<Frame>().unwrap(), Frame::SelfSimilar);
        assert!("bogus".parse::<Frame>().is_err());
    }
}
