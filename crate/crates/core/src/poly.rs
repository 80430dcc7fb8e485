//! Small dense polynomials in the parameter `c`, used for the affine
//! combinations `b(c) Q_k(c) - a(c)`.

use serde::{Deserialize, Serialize};

use crate::Complex;

/// Dense polynomial with coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub coeffs: Vec<Complex>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(v: Complex) -> Self {
        Poly { coeffs: vec![v] }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly {
            coeffs: coeffs.iter().map(|&x| Complex::new(x, 0.0)).collect(),
        }
    }

    /// `alpha * c + beta`.
    pub fn affine(alpha: Complex, beta: Complex) -> Self {
        Poly {
            coeffs: vec![beta, alpha],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex::new(0.0, 0.0))
    }

    pub fn eval(&self, c: Complex) -> Complex {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(0.0, 0.0), |acc, &a| acc * c + a)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, c: Complex) -> (Complex, Complex) {
        let zero = Complex::new(0.0, 0.0);
        self.coeffs.iter().rev().fold((zero, zero), |(p, dp), &a| (p * c + a, dp * c + p))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .rposition(|c| *c != Complex::new(0.0, 0.0))
    }
}
