//! Dense univariate polynomials with exact rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which variable a polynomial is written in. Even polynomials in `y` are
/// stored in `z = 2 alpha y^2` when that is more convenient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    Z,
    Y,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn frac(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Serialize a rational as `"p/q"`, or `"p"` when the denominator is 1.
pub fn rat_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPoly {
    var: Var,
    coeffs: Vec<BigRational>,
}

impl ExactPoly {
    pub fn new(var: Var, coeffs: Vec<BigRational>) -> Self {
        let mut p = Self { var, coeffs };
        p.trim();
        p
    }

    pub fn from_ints(var: Var, coeffs: &[i64]) -> Self {
        Self::new(var, coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn zero(var: Var) -> Self {
        Self {
            var,
            coeffs: Vec::new(),
        }
    }

    pub fn one(var: Var) -> Self {
        Self::constant(var, rat(1))
    }

    pub fn constant(var: Var, c: BigRational) -> Self {
        Self::new(var, vec![c])
    }

    /// `c * var^k`
    pub fn monomial(var: Var, k: usize, c: BigRational) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        Self::new(var, coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of `var^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.var, self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| a * rat(k as i64))
            .collect();
        Self::new(self.var, coeffs)
    }

    /// Multiply by `var^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![BigRational::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self::new(self.var, coeffs)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(self.var), |acc, _| &acc * self)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + rat_to_f64(c))
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(rat_to_f64).collect()
    }

    /// True when every odd-degree coefficient vanishes.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(Zero::is_zero)
    }

    /// Rewrite a `z`-polynomial in `y` using `z = two_alpha * y^2`.
    pub fn z_to_y(&self, two_alpha: &BigRational) -> Result<Self> {
        if self.var != Var::Z {
            return Err(Error::Argument("z_to_y expects a polynomial in z".into()));
        }
        let mut coeffs = vec![BigRational::zero(); 2 * self.coeffs.len()];
        let mut factor = rat(1);
        for (k, a) in self.coeffs.iter().enumerate() {
            coeffs[2 * k] = a * &factor;
            factor *= two_alpha;
        }
        Ok(Self::new(Var::Y, coeffs))
    }

    /// Rewrite an even `y`-polynomial in `z = two_alpha * y^2`.
    pub fn y_to_z(&self, two_alpha: &BigRational) -> Result<Self> {
        if self.var != Var::Y {
            return Err(Error::Argument("y_to_z expects a polynomial in y".into()));
        }
        if !self.is_even() {
            return Err(Error::Argument(
                "odd polynomial in y has no representation in z = 2 alpha y^2".into(),
            ));
        }
        let inv = two_alpha.recip();
        let mut factor = rat(1);
        let coeffs = self
            .coeffs
            .iter()
            .step_by(2)
            .map(|a| {
                let c = a * &factor;
                factor *= &inv;
                c
            })
            .collect();
        Ok(Self::new(Var::Z, coeffs))
    }

    /// Coefficients as `"p/q"` strings, ascending degree.
    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(rat_to_string).collect()
    }

    fn check_var(&self, other: &Self) {
        assert_eq!(
            self.var, other.var,
            "mixing polynomials in different variables"
        );
    }
}

impl<'a> Add<&'a ExactPoly> for &'a ExactPoly {
    type Output = ExactPoly;

    fn add(self, rhs: &ExactPoly) -> ExactPoly {
        self.check_var(rhs);
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        ExactPoly::new(self.var, coeffs)
    }
}

impl<'a> Sub<&'a ExactPoly> for &'a ExactPoly {
    type Output = ExactPoly;

    fn sub(self, rhs: &ExactPoly) -> ExactPoly {
        self.check_var(rhs);
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        ExactPoly::new(self.var, coeffs)
    }
}

impl<'a> Mul<&'a ExactPoly> for &'a ExactPoly {
    type Output = ExactPoly;

    fn mul(self, rhs: &ExactPoly) -> ExactPoly {
        self.check_var(rhs);
        if self.is_zero() || rhs.is_zero() {
            return ExactPoly::zero(self.var);
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        ExactPoly::new(self.var, coeffs)
    }
}

impl Neg for &ExactPoly {
    type Output = ExactPoly;

    fn neg(self) -> ExactPoly {
        ExactPoly::new(self.var, self.coeffs.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for ExactPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let var = match self.var {
            Var::Z => "z",
            Var::Y => "y",
        };
        let mut first = true;
        for (k, a) in self.coeffs.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let sign = if a.is_negative() { "-" } else { "+" };
            if first {
                if a.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = a.abs();
            let show_coeff = k == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{}", rat_to_string(&mag))?;
            }
            match k {
                0 => {}
                1 => write!(f, "{var}")?,
                _ => write!(f, "{var}^{k}")?,
            }
        }
        Ok(())
    }
}

/// Floating-point copy of a polynomial for fast evaluation on grids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealPoly {
    coeffs: Vec<f64>,
}

impl RealPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }
}

impl From<&ExactPoly> for RealPoly {
    fn from(p: &ExactPoly) -> Self {
        Self::new(p.to_f64_coeffs())
    }
}
