use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{spectral_form, SkewMatrix};
use crate::{Result, Tolerances};

/// Real polynomial with coefficients in ascending degree.
///
/// The leading coefficient is nonzero; the zero polynomial has no
/// coefficients at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial, trimming trailing coefficients whose magnitude is
    /// at most `poly_tol` times the largest coefficient.
    pub fn new(mut coefficients: Vec<f64>, poly_tol: f64) -> Self {
        let scale = coefficients.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        while let Some(&last) = coefficients.last() {
            if last == 0.0 || last.abs() <= poly_tol * scale {
                coefficients.pop();
            } else {
                break;
            }
        }
        Polynomial { coefficients }
    }

    /// Coefficients taken as given (only exact zeros trimmed).
    pub fn exact(coefficients: Vec<f64>) -> Self {
        Self::new(coefficients, 0.0)
    }

    pub fn one() -> Self {
        Polynomial { coefficients: vec![1.0] }
    }

    /// `xᵏ`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Polynomial { coefficients: c }
    }

    /// `x² + η²`.
    pub fn rotation_factor(eta: f64) -> Self {
        Polynomial { coefficients: vec![eta * eta, 0.0, 1.0] }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coefficients.last().copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::exact(self.coefficients.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        if self.is_zero() || other.is_zero() {
            return Polynomial { coefficients: vec![] };
        }
        let mut c = vec![0.0; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in other.coefficients.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::exact(c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Remainder of polynomial division by `divisor`.
    pub fn rem(&self, divisor: &Polynomial) -> Polynomial {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let mut r = self.coefficients.clone();
        let lead = divisor.leading();
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let q = r[k] / lead;
            for (i, c) in divisor.coefficients.iter().enumerate() {
                r[k - dd + i] -= q * c;
            }
            r.pop();
        }
        Self::exact(r)
    }

    /// Largest coefficient difference divided by the largest coefficient of
    /// `reference`.
    pub fn relative_error(&self, reference: &Polynomial) -> f64 {
        let n = self.coefficients.len().max(reference.coefficients.len());
        let get = |p: &Polynomial, i: usize| p.coefficients.get(i).copied().unwrap_or(0.0);
        let scale = reference.coefficients.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let diff = (0..n).fold(0.0_f64, |a, i| a.max((get(self, i) - get(reference, i)).abs()));
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Characteristic polynomial `det(A - xI) = (-1)^d · xᵏ · ∏ (x² + η_j²)`,
/// assembled from the spectral blocks of `A`.
pub fn char_poly(a: &SkewMatrix, tol: &Tolerances) -> Result<Polynomial> {
    let sf = spectral_form(a, tol)?;
    let sign = if a.dim() % 2 == 0 { 1.0 } else { -1.0 };
    let p = sf
        .frequencies()
        .iter()
        .fold(Polynomial::monomial(sf.kernel_dim()), |p, &eta| {
            p.mul(&Polynomial::rotation_factor(eta))
        });
    Ok(p.scaled(sign))
}
