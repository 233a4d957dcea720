//! Dense real polynomials with ascending coefficients.

use std::fmt;

use serde::{Deserialize, Serialize};

/// `coeffs[i]` multiplies `x^i`. Trailing zeros are allowed and ignored by
/// [`Poly::degree`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree ignoring trailing zeros; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// k-th derivative evaluated at `x`, without building the derivative.
    pub fn eval_deriv(&self, x: f64, k: usize) -> f64 {
        let mut acc = 0.0;
        for i in (k..self.coeffs.len()).rev() {
            acc = acc * x + self.coeffs[i] * falling_factorial(i, k);
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Drops trailing zero coefficients.
    pub fn trimmed(&self) -> Poly {
        match self.degree() {
            Some(d) => Poly::new(self.coeffs[..=d].to_vec()),
            None => Poly::zero(),
        }
    }
}

/// `i (i-1) ... (i-k+1)`, zero when `k > i`.
pub fn falling_factorial(i: usize, k: usize) -> f64 {
    if k > i {
        return 0.0;
    }
    ((i - k + 1)..=i).fold(1.0, |acc, v| acc * v as f64)
}

impl From<Vec<f64>> for Poly {
    fn from(coeffs: Vec<f64>) -> Self {
        Poly::new(coeffs)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if wrote {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}x")?,
                _ => write!(f, "{a}x^{i}")?,
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivatives() {
        // 1 - x + x^3/6
        let p = Poly::new(vec![1.0, -1.0, 0.0, 1.0 / 6.0]);
        assert_eq!(p.eval(0.0), 1.0);
        assert!((p.eval(2.0) - (1.0 - 2.0 + 8.0 / 6.0)).abs() < 1e-15);
        assert!((p.eval_deriv(2.0, 1) - (-1.0 + 2.0)).abs() < 1e-15);
        assert!((p.eval_deriv(2.0, 3) - 1.0).abs() < 1e-15);
        assert_eq!(p.eval_deriv(2.0, 4), 0.0);
        assert_eq!(p.derivative().derivative().derivative().eval(7.0), 1.0);
    }

    #[test]
    fn degree_ignores_trailing_zeros() {
        assert_eq!(Poly::new(vec![1.0, 2.0, 0.0]).degree(), Some(1));
        assert_eq!(Poly::new(vec![0.0, 0.0]).degree(), None);
        assert!(Poly::zero().is_zero());
    }

    #[test]
    fn product_of_linear_factors() {
        let p = Poly::new(vec![-1.0, 1.0]).mul(&Poly::new(vec![1.0, 1.0]));
        assert_eq!(p.coeffs(), &[-1.0, 0.0, 1.0]);
        assert_eq!(p.to_string(), "-1 + 1x^2");
    }
}
