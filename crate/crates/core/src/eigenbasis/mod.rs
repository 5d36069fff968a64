//! Exact spectral algebra: Kummer eigenpolynomials, weighted inner products,
//! the nonlocal product expansion and the constants `B_l`, `c_l`.

mod moments;
mod nonlocal;
pub mod poly;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

pub use moments::{normalized_moment, MomentTable};
pub use poly::{frac, parse_rat, rat, rat_to_f64, rat_to_string, ExactPoly, RealPoly, Var};

use crate::dimension::Dim;
use crate::error::{Error, Result};

pub const DEFAULT_CAP: usize = 12;

/// `A_{n,k}`: coefficient of `z^k` in `H_n`.
pub fn recurrence_coefficient(dim: Dim, n: usize, k: usize) -> Result<BigRational> {
    if k > n {
        return Err(Error::Argument(format!(
            "recurrence index k = {k} exceeds degree n = {n}"
        )));
    }
    let d = dim.d() as i64;
    let mut a = BigRational::one();
    for j in ((k + 1)..=n).rev() {
        let j = j as i64;
        a = a * rat(-2 * j * (2 * j + d - 2)) / rat(n as i64 - j + 1);
    }
    Ok(a)
}

/// `H_n(z) = sum_k A_{n,k} z^k`.
pub fn kummer_eigenpoly(dim: Dim, n: usize) -> ExactPoly {
    let d = dim.d() as i64;
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    for k in (1..=n).rev() {
        let kk = k as i64;
        coeffs[k - 1] = &coeffs[k] * rat(-2 * kk * (2 * kk + d - 2)) / rat(n as i64 - kk + 1);
    }
    ExactPoly::new(Var::Z, coeffs)
}

/// `2 alpha`, the factor in `z = 2 alpha y^2`.
pub fn two_alpha(dim: Dim) -> BigRational {
    dim.alpha() * rat(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// `z^{(d-2)/2} e^{-z/4}`, the density weight in `z`.
    W,
    /// `y^{d+1} e^{-y^2/(4l)}`, which in `z` reads `z^{d/2} e^{-z/4}`.
    Rho,
}

impl Weight {
    pub fn beta(self, dim: Dim) -> BigRational {
        match self {
            Weight::W => frac(dim.d() as i64 - 2, 2),
            Weight::Rho => frac(dim.d() as i64, 2),
        }
    }
}

/// Weighted inner product of two `z`-polynomials, relative to the weight's mass.
pub fn inner_product(dim: Dim, weight: Weight, p: &ExactPoly, r: &ExactPoly) -> Result<BigRational> {
    if p.var() != Var::Z || r.var() != Var::Z {
        return Err(Error::Argument("inner_product expects polynomials in z".into()));
    }
    let need = p.degree().unwrap_or(0) + r.degree().unwrap_or(0);
    Ok(MomentTable::new(weight.beta(dim), need).pair(p, r))
}

/// Relative `rho` inner product of two even `y`-polynomials.
pub fn rho_inner_y(dim: Dim, p: &ExactPoly, r: &ExactPoly) -> Result<BigRational> {
    let ta = two_alpha(dim);
    inner_product(dim, Weight::Rho, &p.y_to_z(&ta)?, &r.y_to_z(&ta)?)
}

/// `rho`-projection coefficient `<p, q>_rho / <q, q>_rho` of `y`-polynomials.
pub fn rho_projection(dim: Dim, p: &ExactPoly, onto: &ExactPoly) -> Result<BigRational> {
    let den = rho_inner_y(dim, onto, onto)?;
    if den.is_zero() {
        return Err(Error::Argument("projection onto the zero polynomial".into()));
    }
    Ok(rho_inner_y(dim, p, onto)? / den)
}

/// Absolute mass `int_0^inf y^{d+1} e^{-y^2/(4l)} dy` of the `rho` weight.
pub fn rho_mass(dim: Dim) -> f64 {
    // (1/2) (4l)^{d/2+1} Gamma(d/2+1)
    let l = dim.ell_f64();
    let gamma = match dim {
        Dim::Three => 0.75 * std::f64::consts::PI.sqrt(),
        Dim::Four => 2.0,
    };
    0.5 * (4.0 * l).powf(dim.d_f64() / 2.0 + 1.0) * gamma
}

/// The partial-mass eigenfunction `y^{-d} int_0^y phi_{2n} x^{d-1} dx` as a `y`-polynomial.
pub fn partial_mass_eigen(dim: Dim, n: usize) -> ExactPoly {
    let h = kummer_eigenpoly(dim, n)
        .z_to_y(&two_alpha(dim))
        .expect("z polynomial");
    let d = dim.d() as i64;
    let coeffs = h
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, a)| a / rat(j as i64 + d))
        .collect();
    ExactPoly::new(Var::Y, coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialOp {
    /// Radial Laplacian `d^2/dy^2 + (n-1)/y d/dy` in dimension `n`.
    Laplacian(u32),
    /// `y d/dy`.
    Euler,
}

pub fn radial_apply(p: &ExactPoly, op: RadialOp) -> Result<ExactPoly> {
    if p.var() != Var::Y {
        return Err(Error::Argument("radial operators act on polynomials in y".into()));
    }
    if !p.is_even() {
        return Err(Error::Argument(
            "radial operators are applied to even polynomials only".into(),
        ));
    }
    let out = match op {
        RadialOp::Euler => {
            let coeffs = p
                .coeffs()
                .iter()
                .enumerate()
                .map(|(j, a)| a * rat(j as i64))
                .collect();
            ExactPoly::new(Var::Y, coeffs)
        }
        RadialOp::Laplacian(n) => {
            let n = n as i64;
            let coeffs = p
                .coeffs()
                .iter()
                .enumerate()
                .skip(2)
                .map(|(j, a)| a * rat(j as i64 * (j as i64 + n - 2)))
                .collect();
            ExactPoly::new(Var::Y, coeffs)
        }
    };
    Ok(out)
}

/// `z^{-beta} d/dz (H_l int_0^z H_l x^beta dx)` with the density weight exponent.
pub fn nonlocal_expand(dim: Dim) -> Result<ExactPoly> {
    nonlocal_expand_with(dim, &kummer_eigenpoly(dim, dim.ell() as usize))
}

/// Same pipeline with an arbitrary `z`-polynomial in place of `H_l`.
pub fn nonlocal_expand_with(dim: Dim, h: &ExactPoly) -> Result<ExactPoly> {
    nonlocal::nonlocal_expand_with(h, &Weight::W.beta(dim))
}

/// Bundle of eigenpolynomials, conversion matrices and moment tables.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    dim: Dim,
    cap: usize,
    h: Vec<ExactPoly>,
    d: Vec<Vec<BigRational>>,
    dinv: Vec<Vec<BigRational>>,
    moments_w: MomentTable,
    moments_rho: MomentTable,
}

impl EigenSystem {
    pub fn new(dim: Dim, cap: usize) -> Self {
        let h: Vec<ExactPoly> = (0..=cap).map(|n| kummer_eigenpoly(dim, n)).collect();
        let d: Vec<Vec<BigRational>> = h
            .iter()
            .enumerate()
            .map(|(n, p)| (0..=n).map(|k| p.coeff(k)).collect())
            .collect();
        let dinv = invert_unit_lower(&d);
        Self {
            dim,
            cap,
            h,
            d,
            dinv,
            moments_w: MomentTable::new(Weight::W.beta(dim), 2 * cap + 2),
            moments_rho: MomentTable::new(Weight::Rho.beta(dim), 2 * cap + 2),
        }
    }

    pub fn with_default_cap(dim: Dim) -> Self {
        Self::new(dim, DEFAULT_CAP)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn h(&self, n: usize) -> Result<&ExactPoly> {
        self.h.get(n).ok_or(Error::DegreeOverflow {
            degree: n,
            cap: self.cap,
        })
    }

    /// Lower-triangular `D` with rows `A_{n,0..=n}`.
    pub fn d_matrix(&self) -> &[Vec<BigRational>] {
        &self.d
    }

    /// `D^{-1}`, computed by forward substitution.
    pub fn dinv_matrix(&self) -> &[Vec<BigRational>] {
        &self.dinv
    }

    pub fn moments_w(&self) -> &MomentTable {
        &self.moments_w
    }

    pub fn moments_rho(&self) -> &MomentTable {
        &self.moments_rho
    }

    /// Coefficients `g_k` with `p = sum g_k H_k`.
    pub fn monomial_to_eigen(&self, p: &ExactPoly) -> Result<Vec<BigRational>> {
        if p.var() != Var::Z {
            return Err(Error::Argument("monomial_to_eigen expects a polynomial in z".into()));
        }
        let Some(deg) = p.degree() else {
            return Ok(Vec::new());
        };
        if deg > self.cap {
            return Err(Error::DegreeOverflow {
                degree: deg,
                cap: self.cap,
            });
        }
        let mut g = vec![BigRational::zero(); deg + 1];
        for (n, pn) in p.coeffs().iter().enumerate() {
            if pn.is_zero() {
                continue;
            }
            for (k, gk) in g.iter_mut().enumerate().take(n + 1) {
                *gk += pn * &self.dinv[n][k];
            }
        }
        Ok(g)
    }

    pub fn eigen_to_monomial(&self, g: &[BigRational]) -> Result<ExactPoly> {
        if g.len() > self.cap + 1 {
            return Err(Error::DegreeOverflow {
                degree: g.len() - 1,
                cap: self.cap,
            });
        }
        Ok(g.iter()
            .zip(&self.h)
            .fold(ExactPoly::zero(Var::Z), |acc, (c, h)| &acc + &h.scale(c)))
    }

    /// `a_n`: `<H_n, H_n>_w` relative to the weight mass.
    pub fn norm_w(&self, n: usize) -> Result<BigRational> {
        let h = self.h(n)?;
        Ok(self.moments_w.pair(h, h))
    }

    /// `c_n`: `<phi_2n, phi_2n>_rho` of the partial-mass eigenfunction, relative.
    pub fn norm_rho(&self, n: usize) -> Result<BigRational> {
        if n > self.cap {
            return Err(Error::DegreeOverflow {
                degree: n,
                cap: self.cap,
            });
        }
        let p = partial_mass_eigen(self.dim, n).y_to_z(&two_alpha(self.dim))?;
        Ok(self.moments_rho.pair(&p, &p))
    }
}

fn invert_unit_lower(m: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let mut inv: Vec<Vec<BigRational>> = Vec::with_capacity(m.len());
    for i in 0..m.len() {
        let mut row = vec![BigRational::zero(); i + 1];
        row[i] = BigRational::one();
        for j in 0..i {
            // X_ij = -sum_{k=j..i-1} M_ik X_kj, using M_ii = 1
            let acc = (j..i).fold(BigRational::zero(), |acc, k| acc + &m[i][k] * &inv[k][j]);
            row[j] = -acc;
        }
        inv.push(row);
    }
    inv
}

/// `B_l`: coefficient of `H_l` in the eigen-expansion of the nonlocal product.
pub fn compute_b(dim: Dim) -> Result<BigRational> {
    let sys = EigenSystem::new(dim, 2 * dim.ell() as usize);
    let g = sys.monomial_to_eigen(&nonlocal_expand(dim)?)?;
    Ok(g[dim.ell() as usize].clone())
}

/// `c_l = (2 alpha)^l d^{l+1} / (B_l (d + 2l))`.
pub fn compute_c(dim: Dim) -> Result<BigRational> {
    c_from_b(dim, &compute_b(dim)?)
}

pub fn c_from_b(dim: Dim, b: &BigRational) -> Result<BigRational> {
    if !b.is_positive() {
        return Err(Error::Invariant(format!("B_l = {b} must be positive")));
    }
    let l = dim.ell();
    let d = dim.d() as i64;
    let two_alpha_l = (0..l).fold(BigRational::one(), |acc, _| acc * two_alpha(dim));
    let d_pow = (0..=l).fold(BigRational::one(), |acc, _| acc * rat(d));
    Ok(two_alpha_l * d_pow / (b * rat(d + 2 * l as i64)))
}

/// `(2 alpha y^2)^l / (2l + d)` as a `y`-polynomial.
fn leading_profile_term(dim: Dim) -> ExactPoly {
    let l = dim.ell() as usize;
    let ta = two_alpha(dim);
    let c = (0..l).fold(BigRational::one(), |acc, _| acc * &ta) / rat(2 * l as i64 + dim.d() as i64);
    ExactPoly::monomial(Var::Y, 2 * l, c)
}

/// `phi_2l - (2 alpha y^2)^l/(2l + d)`.
pub fn phi_tilde(dim: Dim) -> ExactPoly {
    &partial_mass_eigen(dim, dim.ell() as usize) - &leading_profile_term(dim)
}

/// The residual polynomial `P_{4l-2}` of the refined approximate solution.
pub fn build_residual_poly(dim: Dim) -> Result<ExactPoly> {
    build_residual_poly_with(dim, &compute_b(dim)?)
}

pub fn build_residual_poly_with(dim: Dim, b: &BigRational) -> Result<ExactPoly> {
    let l = dim.ell() as i64;
    let d = dim.d() as i64;
    let phi = partial_mass_eigen(dim, l as usize);
    let pt = phi_tilde(dim);
    let lead = leading_profile_term(dim);
    let lead_sq_monomial = {
        // (2 alpha y^2)^{2l}
        let ta = two_alpha(dim);
        let c = (0..2 * l).fold(BigRational::one(), |acc, _| acc * &ta);
        ExactPoly::monomial(Var::Y, 4 * l as usize, c)
    };
    // (2 alpha y^2)^l = (2l + d) * lead
    let g = lead.scale(&rat(2 * l + d));
    let lap = radial_apply(&lead_sq_monomial, RadialOp::Laplacian(dim.d() + 2))?;
    let pt_sq = &pt * &pt;

    let t1 = phi.scale(&-b);
    let t2 = lap.scale(&(rat(l * d) / rat((2 * l + d) * (2 * l + d))));
    let t3 = &lead * &radial_apply(&pt, RadialOp::Euler)?;
    let t4 = (&g * &pt).scale(&(rat(2 * d + 2 * l) / rat(2 * l + d)));
    let t5 = pt_sq.scale(&rat(d));
    let t6 = radial_apply(&pt_sq, RadialOp::Euler)?.scale(&frac(1, 2));
    Ok([t2, t3, t4, t5, t6].iter().fold(t1, |acc, t| &acc + t))
}

/// Serializable summary of every exact constant for one dimension.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub d: u32,
    pub ell: u32,
    pub alpha: String,
    #[serde(rename = "B")]
    pub b: RationalValue,
    pub c: RationalValue,
    #[serde(rename = "H")]
    pub h: Vec<Vec<String>>,
    pub phi: Vec<Vec<String>>,
    pub varphi: Vec<Vec<String>>,
    pub nonlocal: Vec<String>,
    #[serde(rename = "P_residual")]
    pub p_residual: Vec<String>,
    pub projection_check: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RationalValue {
    pub exact: String,
    pub float: f64,
}

impl RationalValue {
    pub fn new(r: &BigRational) -> Self {
        Self {
            exact: rat_to_string(r),
            float: rat_to_f64(r),
        }
    }
}

impl ConstantsReport {
    /// `count` eigenpolynomials are listed, both as `H_n(z)` and as the
    /// density `phi_2n(y)` and partial-mass `varphi_2n(y)` forms.
    pub fn build(dim: Dim, count: usize) -> Result<Self> {
        let b = compute_b(dim)?;
        let c = c_from_b(dim, &b)?;
        let p = build_residual_poly_with(dim, &b)?;
        let phi_l = partial_mass_eigen(dim, dim.ell() as usize);
        let check = rho_projection(dim, &p, &phi_l)?;
        let ta = two_alpha(dim);
        let h: Vec<ExactPoly> = (0..count).map(|n| kummer_eigenpoly(dim, n)).collect();
        Ok(Self {
            d: dim.d(),
            ell: dim.ell(),
            alpha: rat_to_string(&dim.alpha()),
            b: RationalValue::new(&b),
            c: RationalValue::new(&c),
            phi: h
                .iter()
                .map(|p| p.z_to_y(&ta).map(|q| q.to_strings()))
                .collect::<Result<_>>()?,
            h: h.iter().map(ExactPoly::to_strings).collect(),
            varphi: (0..count)
                .map(|n| partial_mass_eigen(dim, n).to_strings())
                .collect(),
            nonlocal: nonlocal_expand(dim)?.to_strings(),
            p_residual: p.to_strings(),
            projection_check: rat_to_string(&check),
        })
    }
}
