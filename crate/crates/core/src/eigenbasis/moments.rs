use num_rational::BigRational;
use num_traits::One;

use super::poly::{rat, ExactPoly};

/// `mu_k = M_k / M_0` for the weight `z^beta e^{-z/4}` on the half line,
/// i.e. `prod_{j=1..k} 4(j + beta)`.
pub fn normalized_moment(beta: &BigRational, k: usize) -> BigRational {
    (1..=k).fold(BigRational::one(), |acc, j| {
        acc * (beta + rat(j as i64)) * rat(4)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentTable {
    beta: BigRational,
    mu: Vec<BigRational>,
}

impl MomentTable {
    /// Table of `mu_0..=mu_max`.
    pub fn new(beta: BigRational, max: usize) -> Self {
        let mut mu = Vec::with_capacity(max + 1);
        mu.push(BigRational::one());
        for k in 1..=max {
            let next = &mu[k - 1] * (&beta + rat(k as i64)) * rat(4);
            mu.push(next);
        }
        Self { beta, mu }
    }

    pub fn beta(&self) -> &BigRational {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `mu_k`, computed directly when `k` lies beyond the table.
    pub fn get(&self, k: usize) -> BigRational {
        match self.mu.get(k) {
            Some(m) => m.clone(),
            None => normalized_moment(&self.beta, k),
        }
    }

    pub fn as_slice(&self) -> &[BigRational] {
        &self.mu
    }

    /// `sum_{i,j} p_i r_j mu_{i+j}`: the weighted integral of `p r` relative to `M_0`.
    pub fn pair(&self, p: &ExactPoly, r: &ExactPoly) -> BigRational {
        let mut acc = BigRational::from_integer(0.into());
        for (i, a) in p.coeffs().iter().enumerate() {
            for (j, b) in r.coeffs().iter().enumerate() {
                acc += a * b * self.get(i + j);
            }
        }
        acc
    }
}
