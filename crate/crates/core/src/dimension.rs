use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Space dimension. Only d = 3 and d = 4 give an integer `l = d/(d-2)`,
/// i.e. a zero eigenvalue `1 - 2 l alpha = 0` of the linearized operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Dim {
    Three,
    Four,
}

impl Dim {
    pub fn new(d: u32) -> Result<Self> {
        match d {
            3 => Ok(Dim::Three),
            4 => Ok(Dim::Four),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    pub fn d(self) -> u32 {
        match self {
            Dim::Three => 3,
            Dim::Four => 4,
        }
    }

    /// `l = d/(d-2)`: 3 for d = 3, 2 for d = 4.
    pub fn ell(self) -> u32 {
        match self {
            Dim::Three => 3,
            Dim::Four => 2,
        }
    }

    /// `alpha = (d-2)/(2d) = 1/(2l)`.
    pub fn alpha(self) -> BigRational {
        BigRational::new(BigInt::from(self.d() - 2), BigInt::from(2 * self.d()))
    }

    pub fn alpha_f64(self) -> f64 {
        1.0 / (2.0 * self.ell() as f64)
    }

    pub fn d_f64(self) -> f64 {
        self.d() as f64
    }

    pub fn ell_f64(self) -> f64 {
        self.ell() as f64
    }

    /// Number of modes kept in the finite-dimensional part, `2l`.
    pub fn mode_count(self) -> usize {
        2 * self.ell() as usize
    }

    pub fn all() -> [Dim; 2] {
        [Dim::Three, Dim::Four]
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self> {
        Dim::new(d)
    }
}

impl From<Dim> for u32 {
    fn from(d: Dim) -> u32 {
        d.d()
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.d())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_and_alpha_identities() {
        for dim in Dim::all() {
            let (d, l) = (dim.d(), dim.ell());
            assert_eq!(l * (d - 2), d);
            let two_alpha_l = dim.alpha() * BigRational::from_integer(BigInt::from(2 * l));
            assert_eq!(two_alpha_l, BigRational::from_integer(BigInt::from(1)));
        }
    }

    #[test]
    fn rejects_non_integer_ell() {
        for d in [0, 1, 2, 5, 6] {
            assert!(matches!(Dim::new(d), Err(Error::UnsupportedDimension(x)) if x == d));
        }
    }
}
