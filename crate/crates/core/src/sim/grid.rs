use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_INTERVALS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Spacing {
    Uniform { dy: f64 },
    /// Spacing grows by `ratio` from one interval to the next.
    Geometric { ratio: f64 },
}

/// Radial nodes `0 = y_0 < y_1 < ... < y_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl Grid {
    /// `n` equal intervals on `[0, y_max]`.
    pub fn uniform(n: usize, y_max: f64) -> Result<Self> {
        check(n, y_max)?;
        let dy = y_max / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * dy).collect();
        nodes[n] = y_max;
        Ok(Self {
            nodes,
            spacing: Spacing::Uniform { dy },
        })
    }

    /// `n` intervals on `[0, y_max]` whose widths grow geometrically by `ratio`.
    pub fn geometric(n: usize, y_max: f64, ratio: f64) -> Result<Self> {
        check(n, y_max)?;
        if !(ratio >= 1.0 && ratio.is_finite()) {
            return Err(Error::Config(format!("stretch ratio must be >= 1, got {ratio}")));
        }
        if ratio == 1.0 {
            return Self::uniform(n, y_max);
        }
        let h0 = y_max * (ratio - 1.0) / (ratio.powi(n as i32) - 1.0);
        let mut nodes = Vec::with_capacity(n + 1);
        let (mut y, mut h) = (0.0, h0);
        nodes.push(0.0);
        for _ in 0..n {
            y += h;
            h *= ratio;
            nodes.push(y);
        }
        nodes[n] = y_max;
        if !nodes.windows(2).all(|w| w[1] > w[0]) || h0 <= 0.0 {
            return Err(Error::Config(format!(
                "geometric grid with n = {n}, ratio = {ratio} underflows"
            )));
        }
        Ok(Self {
            nodes,
            spacing: Spacing::Geometric { ratio },
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::Config(format!(
                "grid needs at least {} nodes, got {}",
                MIN_INTERVALS + 1,
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Config("first grid node must be 0".into()));
        }
        if !nodes.iter().all(|y| y.is_finite()) || !nodes.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Config("grid nodes must be finite and strictly increasing".into()));
        }
        let n = nodes.len() - 1;
        let dy = nodes[n] / n as f64;
        let uniform = nodes
            .iter()
            .enumerate()
            .all(|(i, y)| (y - i as f64 * dy).abs() <= 1e-9 * nodes[n]);
        let spacing = if uniform {
            Spacing::Uniform { dy }
        } else {
            let r = (nodes[n] - nodes[n - 1]) / (nodes[2] - nodes[1]);
            Spacing::Geometric {
                ratio: r.powf(1.0 / (n as f64 - 2.0)),
            }
        };
        Ok(Self { nodes, spacing })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn y_max(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Width of interval `i` (between nodes `i` and `i+1`).
    pub fn h(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn min_h(&self) -> f64 {
        (0..self.intervals()).map(|i| self.h(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_h(&self) -> f64 {
        (0..self.intervals()).map(|i| self.h(i)).fold(0.0, f64::max)
    }

    /// Trapezoid weights: `sum w_i f(y_i)` approximates `int_0^{y_max} f`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.intervals();
        let mut w = vec![0.0; n + 1];
        for i in 0..n {
            let h = self.h(i);
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }

    /// Centered first derivative (one-sided at the ends, zero slope at the
    /// origin by symmetry).
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        let n = self.intervals();
        let y = &self.nodes;
        let mut out = vec![0.0; n + 1];
        for i in 1..n {
            let (hm, hp) = (y[i] - y[i - 1], y[i + 1] - y[i]);
            out[i] = (hm * hm * v[i + 1] + (hp * hp - hm * hm) * v[i] - hp * hp * v[i - 1])
                / (hm * hp * (hm + hp));
        }
        // second-order one-sided at the far end
        let (h1, h2) = (y[n] - y[n - 1], y[n - 1] - y[n - 2]);
        out[n] = ((2.0 * h1 + h2) / (h1 * (h1 + h2))) * v[n] - ((h1 + h2) / (h1 * h2)) * v[n - 1]
            + (h1 / (h2 * (h1 + h2))) * v[n - 2];
        out
    }

    /// `y d/dy` applied to a nodal field.
    pub fn euler(&self, v: &[f64]) -> Vec<f64> {
        self.derivative(v)
            .into_iter()
            .zip(&self.nodes)
            .map(|(dv, y)| y * dv)
            .collect()
    }

    /// Linear interpolation; clamps outside the grid.
    pub fn interpolate(&self, v: &[f64], y: f64) -> f64 {
        let nodes = &self.nodes;
        if y <= 0.0 {
            return v[0];
        }
        if y >= self.y_max() {
            return v[nodes.len() - 1];
        }
        let i = nodes.partition_point(|&x| x <= y) - 1;
        let t = (y - nodes[i]) / (nodes[i + 1] - nodes[i]);
        v[i] * (1.0 - t) + v[i + 1] * t
    }
}

fn check(n: usize, y_max: f64) -> Result<()> {
    if n < MIN_INTERVALS {
        return Err(Error::Config(format!(
            "grid needs at least {MIN_INTERVALS} intervals, got {n}"
        )));
    }
    if !(y_max > 0.0 && y_max.is_finite()) {
        return Err(Error::Config(format!("y_max must be positive, got {y_max}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_ends_at_y_max() {
        let g = Grid::geometric(100, 5.0, 1.03).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.y_max(), 5.0);
        assert!((g.h(99) / g.h(0) - 1.03f64.powi(99)).abs() < 1e-9 * 1.03f64.powi(99));
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::uniform(8, 1.0).is_err());
        assert!(Grid::from_nodes(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        for g in [Grid::uniform(40, 3.0).unwrap(), Grid::geometric(40, 3.0, 1.05).unwrap()] {
            let v: Vec<f64> = g.nodes().iter().map(|y| 1.0 + y * y).collect();
            let dv = g.derivative(&v);
            for (y, d) in g.nodes().iter().zip(&dv) {
                assert!((d - 2.0 * y).abs() < 1e-10, "{y} {d}");
            }
        }
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = Grid::geometric(50, 2.0, 1.02).unwrap();
        let s: f64 = g.trapezoid_weights().iter().zip(g.nodes()).map(|(w, y)| w * y).sum();
        assert!((s - 2.0).abs() < 1e-12);
    }
}
