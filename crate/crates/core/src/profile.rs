//! The blowup profile `Q`, its density form `F`, the refined ansatz
//! `Psi = Q + Psi_hat`, cutoffs and the predicted final profile.

use serde::{Deserialize, Serialize};

use crate::dimension::Dim;
use crate::eigenbasis::{self, partial_mass_eigen, phi_tilde, rat_to_f64, RealPoly};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub dim: Dim,
    pub c: f64,
    pub b: f64,
    /// Absolute tolerance on `c xi^{2l} Q^l + d Q - 1`.
    pub root_tol: f64,
    pub max_iter: usize,
}

impl ProfileParams {
    pub fn new(dim: Dim) -> Result<Self> {
        let b = eigenbasis::compute_b(dim)?;
        let c = eigenbasis::c_from_b(dim, &b)?;
        Self::with_constants(dim, rat_to_f64(&b), rat_to_f64(&c))
    }

    pub fn with_constants(dim: Dim, b: f64, c: f64) -> Result<Self> {
        let p = Self {
            dim,
            c,
            b,
            root_tol: 1e-13,
            max_iter: 200,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Argument(format!("c must be positive, got {}", self.c)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Argument(format!("B must be positive, got {}", self.b)));
        }
        if !(self.root_tol > 0.0 && self.root_tol <= 1e-10) {
            return Err(Error::Argument(format!(
                "root tolerance must lie in (0, 1e-10], got {}",
                self.root_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Argument("max_iter must be positive".into()));
        }
        Ok(())
    }

    fn ell(&self) -> i32 {
        self.dim.ell() as i32
    }

    fn d(&self) -> f64 {
        self.dim.d_f64()
    }

    /// `G(Q) = c xi^{2l} Q^l + d Q - 1`.
    pub fn implicit_residual(&self, xi: f64, q: f64) -> f64 {
        let l = self.ell();
        self.c * xi.powi(2 * l) * q.powi(l) + self.d() * q - 1.0
    }

    /// The unique root `Q(xi)` in `(0, 1/d]`.
    pub fn q_of_xi(&self, xi: f64) -> Result<f64> {
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::Argument(format!("xi must be finite and >= 0, got {xi}")));
        }
        let d = self.d();
        if xi == 0.0 {
            return Ok(1.0 / d);
        }
        let l = self.ell();
        let a = self.c * xi.powi(2 * l);
        let g = |q: f64| a * q.powi(l) + d * q - 1.0;
        let dg = |q: f64| a * l as f64 * q.powi(l - 1) + d;

        // G is increasing and convex, so Newton started where G >= 0 decreases
        // monotonically onto the root.
        let mut q = (1.0 / d).min(a.powf(-1.0 / l as f64));
        for _ in 0..self.max_iter {
            let r = g(q);
            if r.abs() <= self.root_tol {
                return Ok(q);
            }
            let next = q - r / dg(q);
            if !(next > 0.0 && next < q) {
                break;
            }
            q = next;
        }
        if g(q).abs() <= self.root_tol {
            return Ok(q);
        }
        self.bisect(xi, &g)
    }

    fn bisect(&self, xi: f64, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0_f64, 1.0 / self.d());
        for _ in 0..(self.max_iter.max(2000)) {
            let mid = 0.5 * (lo + hi);
            let r = g(mid);
            if r.abs() <= self.root_tol {
                return Ok(mid);
            }
            if r > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                if g(hi).abs() <= self.root_tol {
                    return Ok(hi);
                }
                break;
            }
        }
        let q = 0.5 * (lo + hi);
        Err(Error::Convergence {
            iterations: self.max_iter,
            xi,
            residual: g(q).abs(),
        })
    }

    /// `1/d - Q`, evaluated as `c xi^{2l} Q^l / d` to avoid cancellation.
    pub fn q_deficit(&self, xi: f64) -> Result<f64> {
        let q = self.q_of_xi(xi)?;
        let l = self.ell();
        Ok(self.c * xi.powi(2 * l) * q.powi(l) / self.d())
    }

    pub fn q_prime(&self, xi: f64) -> Result<f64> {
        let q = self.q_of_xi(xi)?;
        Ok(self.q_prime_from(xi, q))
    }

    fn q_prime_from(&self, xi: f64, q: f64) -> f64 {
        let l = self.ell();
        -self.c * xi.powi(2 * l - 1) * q.powi(l + 1) / (0.5 - q)
    }

    fn q_second_from(&self, xi: f64, q: f64, qp: f64) -> f64 {
        let l = self.ell();
        let lf = l as f64;
        let bracket = (2.0 * lf - 1.0) * xi.powi(2 * l - 2)
            + xi.powi(2 * l - 1) * ((lf + 1.0) * qp / q + qp / (0.5 - q));
        -self.c * q.powi(l + 1) / (0.5 - q) * bracket
    }

    pub fn q_second(&self, xi: f64) -> Result<f64> {
        let q = self.q_of_xi(xi)?;
        let qp = self.q_prime_from(xi, q);
        Ok(self.q_second_from(xi, q, qp))
    }

    /// `(Q, Q', Q'')` at `xi`.
    pub fn q_jet(&self, xi: f64) -> Result<[f64; 3]> {
        let q = self.q_of_xi(xi)?;
        let qp = self.q_prime_from(xi, q);
        Ok([q, qp, self.q_second_from(xi, q, qp)])
    }

    /// `F = d Q + xi Q'`.
    pub fn f_of_xi(&self, xi: f64) -> Result<f64> {
        let q = self.q_of_xi(xi)?;
        Ok(self.d() * q + xi * self.q_prime_from(xi, q))
    }

    /// `1 - F`, free of cancellation near the origin.
    pub fn f_deficit(&self, xi: f64) -> Result<f64> {
        let q = self.q_of_xi(xi)?;
        let l = self.ell();
        let a = self.c * xi.powi(2 * l) * q.powi(l);
        Ok(a + a * q / (0.5 - q))
    }

    /// `lim xi^2 Q(xi) = c^{-1/l}`.
    pub fn q_tail_constant(&self) -> f64 {
        self.c.powf(-1.0 / self.ell() as f64)
    }

    /// `(d-2)(2/c)^{1/l}`, the constant in the final profile.
    pub fn final_profile_constant(&self) -> f64 {
        (self.d() - 2.0) * (2.0 / self.c).powf(1.0 / self.ell() as f64)
    }

    /// `u*(r) = (d-2)(2/c)^{1/l} |log r|^{1/l} / r^2`.
    pub fn final_profile(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Argument(format!(
                "final profile needs 0 < r < 1, got {r}"
            )));
        }
        Ok(self.final_profile_constant() * r.ln().abs().powf(1.0 / self.ell() as f64) / (r * r))
    }

    /// Final profile through the matching point `|x0| = K0 sqrt(tau) |log tau|^{1/2l}`:
    /// returns `F(K0) / tau`.
    pub fn final_profile_matched(&self, r: f64, k0: f64) -> Result<f64> {
        if !(r > 0.0 && r < 1.0) || !(k0 > 0.0) {
            return Err(Error::Argument(format!(
                "matched final profile needs 0 < r < 1 and K0 > 0, got r = {r}, K0 = {k0}"
            )));
        }
        let inv2l = 1.0 / (2.0 * self.ell() as f64);
        // residual in log tau; tau in (0, 1/e) makes the right side increasing in tau
        let h = |lt: f64| (k0.ln() + 0.5 * lt + inv2l * (-lt).ln()) - r.ln();
        let (mut lo, mut hi) = (-1e4_f64, -1.0 - 1e-12);
        if h(hi) < 0.0 {
            return Err(Error::Argument(format!(
                "r = {r} too large for matching scale K0 = {k0}"
            )));
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let tau = (0.5 * (lo + hi)).exp();
        Ok(self.f_of_xi(k0)? / tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    /// Cubic smoothstep, C^1.
    C1,
    /// Quintic smoothstep, C^2.
    C2,
    /// Septic smoothstep, C^3.
    C3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub k: f64,
    pub smoothness: Smoothness,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            k: 1.0,
            smoothness: Smoothness::C2,
        }
    }
}

impl CutoffSpec {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Argument(format!("cutoff scale K must be positive, got {k}")));
        }
        Ok(Self {
            k,
            smoothness: Smoothness::C2,
        })
    }

    /// `chi_0(t)` and its first two derivatives.
    pub fn chi0_jet(smoothness: Smoothness, x: f64) -> [f64; 3] {
        if x <= 1.0 {
            return [1.0, 0.0, 0.0];
        }
        if x >= 2.0 {
            return [0.0, 0.0, 0.0];
        }
        let t = x - 1.0;
        let (s, ds, dds) = match smoothness {
            Smoothness::C1 => (
                t * t * (3.0 - 2.0 * t),
                6.0 * t * (1.0 - t),
                6.0 - 12.0 * t,
            ),
            Smoothness::C2 => (
                t * t * t * (10.0 - 15.0 * t + 6.0 * t * t),
                30.0 * t * t * (1.0 - t) * (1.0 - t),
                60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
            ),
            Smoothness::C3 => (
                t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3)),
                140.0 * t.powi(3) * (1.0 - t).powi(3),
                420.0 * t * t * (1.0 - t) * (1.0 - t) * (1.0 - 2.0 * t),
            ),
        };
        [1.0 - s, -ds, -dds]
    }

    /// `chi_K(xi) = chi_0(xi / K)`.
    pub fn chi(&self, xi: f64) -> f64 {
        Self::chi0_jet(self.smoothness, xi / self.k)[0]
    }

    /// `chi_K` and its first two derivatives in `xi`.
    pub fn chi_jet(&self, xi: f64) -> [f64; 3] {
        let [c, dc, ddc] = Self::chi0_jet(self.smoothness, xi / self.k);
        [c, dc / self.k, ddc / (self.k * self.k)]
    }
}

/// Value, `y`- and `s`-derivatives of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub vy: f64,
    pub vyy: f64,
    pub vs: f64,
}

/// `Q`, `Psi_hat` and their combination on the `(y, s)` plane.
#[derive(Debug, Clone)]
pub struct Profile {
    pub params: ProfileParams,
    /// Cutoff used inside `Psi_hat`; the construction uses `K = 1`.
    pub cutoff: CutoffSpec,
    phi_tilde: RealPoly,
    phi_tilde_d1: RealPoly,
    phi_tilde_d2: RealPoly,
}

impl Profile {
    pub fn new(dim: Dim) -> Result<Self> {
        Self::with(ProfileParams::new(dim)?, CutoffSpec::default())
    }

    pub fn with(params: ProfileParams, cutoff: CutoffSpec) -> Result<Self> {
        params.validate()?;
        let pt = RealPoly::from(&phi_tilde(params.dim));
        let d1 = pt.derivative();
        let d2 = d1.derivative();
        Ok(Self {
            params,
            cutoff,
            phi_tilde: pt,
            phi_tilde_d1: d1,
            phi_tilde_d2: d2,
        })
    }

    pub fn dim(&self) -> Dim {
        self.params.dim
    }

    /// `xi = y s^{-1/(2l)}`.
    pub fn xi(&self, y: f64, s: f64) -> f64 {
        y * s.powf(-1.0 / (2.0 * self.params.dim.ell_f64()))
    }

    fn check_s(s: f64) -> Result<()> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Argument(format!("self-similar time must be positive, got {s}")));
        }
        Ok(())
    }

    /// `phi_2l(y) - (2 alpha y^2)^l / (2l + d)`.
    pub fn phi_tilde(&self, y: f64) -> f64 {
        self.phi_tilde.eval(y)
    }

    /// `Q(y s^{-1/2l})` with its derivatives.
    pub fn q_jet(&self, y: f64, s: f64) -> Result<Jet> {
        Self::check_s(s)?;
        let l = self.params.dim.ell_f64();
        let scale = s.powf(-1.0 / (2.0 * l));
        let xi = y * scale;
        let [q, qp, qpp] = self.params.q_jet(xi)?;
        Ok(Jet {
            v: q,
            vy: qp * scale,
            vyy: qpp * scale * scale,
            vs: -qp * xi / (2.0 * l * s),
        })
    }

    /// `Psi_hat = -(1/(B s)) phi_tilde(y) chi_0(xi)` with its derivatives.
    pub fn psi_hat_jet(&self, y: f64, s: f64) -> Result<Jet> {
        Self::check_s(s)?;
        let l = self.params.dim.ell_f64();
        let scale = s.powf(-1.0 / (2.0 * l));
        let xi = y * scale;
        let [c, dc, ddc] = self.cutoff.chi_jet(xi);
        if c == 0.0 && dc == 0.0 && ddc == 0.0 {
            return Ok(Jet::default());
        }
        let (p, p1, p2) = (
            self.phi_tilde.eval(y),
            self.phi_tilde_d1.eval(y),
            self.phi_tilde_d2.eval(y),
        );
        let amp = -1.0 / (self.params.b * s);
        // d/ds chi_0(y s^{-1/2l}) = chi_0' * (-xi / (2 l s))
        let chi_s = dc * (-xi / (2.0 * l * s));
        Ok(Jet {
            v: amp * p * c,
            vy: amp * (p1 * c + p * dc * scale),
            vyy: amp * (p2 * c + 2.0 * p1 * dc * scale + p * ddc * scale * scale),
            vs: -amp / s * p * c + amp * p * chi_s,
        })
    }

    pub fn psi_hat(&self, y: f64, s: f64) -> Result<f64> {
        Ok(self.psi_hat_jet(y, s)?.v)
    }

    pub fn psi(&self, y: f64, s: f64) -> Result<f64> {
        Ok(self.q_jet(y, s)?.v + self.psi_hat(y, s)?)
    }

    pub fn psi_jet(&self, y: f64, s: f64) -> Result<Jet> {
        let q = self.q_jet(y, s)?;
        let h = self.psi_hat_jet(y, s)?;
        Ok(Jet {
            v: q.v + h.v,
            vy: q.vy + h.vy,
            vyy: q.vyy + h.vyy,
            vs: q.vs + h.vs,
        })
    }

    /// Generated error `E_hat = rhs(Psi) - d_s Psi` of the refined ansatz, where
    /// `rhs(v) = Delta_{d+2} v - y v'/2 - v + d v^2 + y v v'`. The profile
    /// equation for `Q` is cancelled analytically before evaluation.
    pub fn ehat(&self, y: f64, s: f64) -> Result<f64> {
        let dim = self.params.dim;
        let d = dim.d_f64();
        let q = self.q_jet(y, s)?;
        let p = self.psi_hat_jet(y, s)?;
        let lap = |j: &Jet| {
            if y == 0.0 {
                (d + 2.0) * j.vyy
            } else {
                j.vyy + (d + 1.0) / y * j.vy
            }
        };
        let e_q = lap(&q) - q.vs;
        let h_p = lap(&p) - (0.5 - q.v) * y * p.vy + (2.0 * d * q.v - 1.0 + y * q.vy) * p.v;
        let nl = d * p.v * p.v + y * p.v * p.vy;
        Ok(e_q + h_p + nl - p.vs)
    }

    /// Partial-mass eigenfunction `varphi_2n` as a floating polynomial in `y`.
    pub fn varphi(&self, n: usize) -> RealPoly {
        RealPoly::from(&partial_mass_eigen(self.params.dim, n))
    }
}
