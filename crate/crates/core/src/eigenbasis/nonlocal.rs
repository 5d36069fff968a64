//! `z^{-beta} d/dz ( H(z) int_0^z H(x) x^beta dx )` with exact bookkeeping of
//! the fractional power `z^beta` that appears in the intermediate steps.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::poly::{rat, ExactPoly, Var};
use crate::error::{Error, Result};

/// `z^offset * poly(z)` with a rational offset.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Shifted {
    offset: BigRational,
    poly: ExactPoly,
}

impl Shifted {
    /// `int_0^z poly(x) x^offset dx`, valid for `offset > -1`.
    fn integrate(poly: &ExactPoly, offset: &BigRational) -> Self {
        let coeffs = std::iter::once(BigRational::zero())
            .chain(
                poly.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a / (rat(k as i64 + 1) + offset)),
            )
            .collect();
        Self {
            offset: offset.clone(),
            poly: ExactPoly::new(Var::Z, coeffs),
        }
    }

    fn mul_poly(&self, p: &ExactPoly) -> Self {
        Self {
            offset: self.offset.clone(),
            poly: &self.poly * p,
        }
    }

    fn derivative(&self) -> Self {
        let coeffs = self
            .poly
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, a)| a * (rat(k as i64) + &self.offset))
            .collect();
        Self {
            offset: &self.offset - rat(1),
            poly: ExactPoly::new(Var::Z, coeffs),
        }
        .normalize()
    }

    fn mul_power(&self, p: &BigRational) -> Self {
        Self {
            offset: &self.offset + p,
            poly: self.poly.clone(),
        }
        .normalize()
    }

    /// Absorb vanishing low-order coefficients into the offset.
    fn normalize(mut self) -> Self {
        let lead_zeros = self.poly.coeffs().iter().take_while(|c| c.is_zero()).count();
        if lead_zeros > 0 && !self.poly.is_zero() {
            let rest = self.poly.coeffs()[lead_zeros..].to_vec();
            self.poly = ExactPoly::new(Var::Z, rest);
            self.offset += rat(lead_zeros as i64);
        }
        self
    }

    fn into_poly(self) -> Result<ExactPoly> {
        if self.poly.is_zero() {
            return Ok(self.poly);
        }
        if !self.offset.is_integer() || self.offset.is_negative() {
            return Err(Error::Invariant(format!(
                "fractional power z^{} survived the nonlocal expansion",
                self.offset
            )));
        }
        let k = self.offset.to_integer();
        let k: usize = k
            .try_into()
            .map_err(|_| Error::Invariant("offset out of range".into()))?;
        Ok(self.poly.shift(k))
    }
}

/// `z^{-beta} d/dz ( h(z) int_0^z h(x) x^beta dx )`.
pub fn nonlocal_expand_with(h: &ExactPoly, beta: &BigRational) -> Result<ExactPoly> {
    if h.var() != Var::Z {
        return Err(Error::Argument(
            "nonlocal expansion expects a polynomial in z".into(),
        ));
    }
    Shifted::integrate(h, beta)
        .mul_poly(h)
        .derivative()
        .mul_power(&-beta)
        .into_poly()
}
