//! Finite-volume spectrum of `H = Delta_{d+2} - y d_y / (2l)`, which is
//! self-adjoint in `L^2_rho`: `H f = rho^{-1} (rho f')'`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dimension::Dim;
use crate::error::{Error, Result};
use crate::sim::scheme::solve_tridiagonal;

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Cell centres.
    pub nodes: Vec<f64>,
    /// Eigenvalues in decreasing order.
    pub values: Vec<f64>,
    /// Eigenfunctions at the cell centres, same order.
    pub vectors: Vec<Vec<f64>>,
}

fn ln_rho(dim: Dim, y: f64) -> f64 {
    (dim.d() as f64 + 1.0) * y.ln() - y * y / (4.0 * dim.ell_f64())
}

/// The `count` largest eigenvalues on `n` cells of `[0, y_max]`.
pub fn discrete_spectrum(dim: Dim, n: usize, y_max: f64, count: usize) -> Result<Vec<f64>> {
    Ok(discrete_spectrum_full(dim, n, y_max, count)?.values)
}

/// Symmetrized operator `rho^{1/2} H rho^{-1/2}` on cell centres: the
/// diagonal, the off-diagonal and `ln rho` at the centres.
struct Assembled {
    nodes: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
    lr: Vec<f64>,
}

fn check_args(n: usize, y_max: f64, count: usize) -> Result<()> {
    if n < 16 || !(y_max > 0.0) || count == 0 || count > n {
        return Err(Error::Argument(format!(
            "need n >= 16, y_max > 0 and 0 < count <= n (n = {n}, y_max = {y_max}, count = {count})"
        )));
    }
    Ok(())
}

fn assemble(dim: Dim, n: usize, y_max: f64) -> Assembled {
    let h = y_max / n as f64;
    let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let lr: Vec<f64> = nodes.iter().map(|&y| ln_rho(dim, y)).collect();
    // face i+1/2 sits at (i+1) h; the face at 0 carries no flux and the
    // outer face is closed
    let face = |i: usize| ln_rho(dim, (i as f64 + 1.0) * h);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let f = face(i);
        diag[i] -= (f - lr[i]).exp() / (h * h);
        diag[i + 1] -= (f - lr[i + 1]).exp() / (h * h);
        off[i] = (f - 0.5 * (lr[i] + lr[i + 1])).exp() / (h * h);
    }
    Assembled { nodes, diag, off, lr }
}

/// Number of eigenvalues below `x` (Sturm count of the LDL^T pivots).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * off[i - 1].abs().max(1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

pub fn discrete_spectrum_full(dim: Dim, n: usize, y_max: f64, count: usize) -> Result<Spectrum> {
    check_args(n, y_max, count)?;
    let Assembled { nodes, diag, off, lr } = assemble(dim, n, y_max);
    // Gershgorin interval
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs());
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for k in 1..=count {
        // k-th largest: the smallest x with at most k - 1 eigenvalues >= x
        let (mut a, mut b) = (lo, hi);
        while b - a > 4.0 * f64::EPSILON * scale {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if n - count_below(&diag, &off, m) >= k {
                a = m;
            } else {
                b = m;
            }
        }
        let lambda = 0.5 * (a + b);
        values.push(lambda);
        let g = inverse_iteration(&diag, &off, lambda, scale)?;
        // undo the symmetrizing scaling g = rho^{1/2} f
        vectors.push(g.iter().zip(&lr).map(|(g, l)| g * (-0.5 * l).exp()).collect());
    }
    Ok(Spectrum {
        nodes,
        values,
        vectors,
    })
}

fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, scale: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let shift = lambda + 1e-10 * scale;
    let d: Vec<f64> = diag.iter().map(|a| a - shift).collect();
    let mut lower = vec![0.0; n];
    lower[1..].copy_from_slice(off);
    let mut x = vec![1.0; n];
    for _ in 0..4 {
        solve_tridiagonal(&lower, &d, off, &mut x)?;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical("inverse iteration broke down".into()));
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(x)
}

/// Same operator through a dense symmetric eigensolver; an independent
/// check on the tridiagonal path, practical for moderate `n`.
pub fn discrete_spectrum_dense(dim: Dim, n: usize, y_max: f64, count: usize) -> Result<Vec<f64>> {
    check_args(n, y_max, count)?;
    let asm = assemble(dim, n, y_max);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = asm.diag[i];
        if i + 1 < n {
            a[(i, i + 1)] = asm.off[i];
            a[(i + 1, i)] = asm.off[i];
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev.truncate(count);
    Ok(ev)
}
