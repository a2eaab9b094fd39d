use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Polynomial Σ_{k=0}^{N} a_k z^k with an explicit degree cap N.
///
/// The cap is the length of the coefficient vector minus one, and
/// trailing zeros are kept: arithmetic reports the cap it produced rather
/// than trimming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    /// An empty vector is read as the zero series with cap 0.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            return Self::zero(0);
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero(cap: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); cap + 1] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// c z^n, with cap n.
    pub fn monomial(n: usize, c: Complex64) -> Self {
        let mut s = Self::zero(n);
        s.coeffs[n] = c;
        s
    }

    pub fn degree_cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of z^k, zero past the cap.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&a| a * c).collect() }
    }

    /// Zero-pads to the given cap; never truncates.
    pub fn padded(&self, cap: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < cap + 1 {
            coeffs.resize(cap + 1, Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let cap = self.degree_cap().max(other.degree_cap());
        Self { coeffs: (0..=cap).map(|k| f(self.coeff(k), other.coeff(k))).collect() }
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Cauchy product; the cap is the sum of the caps.
impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        let mut out = TruncatedSeries::zero(self.degree_cap() + rhs.degree_cap());
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn caps_and_padding() {
        assert_eq!(TruncatedSeries::new(vec![]).degree_cap(), 0);
        assert!(TruncatedSeries::new(vec![]).is_zero());
        let m = TruncatedSeries::monomial(3, c(2.0));
        assert_eq!(m.degree_cap(), 3);
        assert_eq!(m.coeff(3), c(2.0));
        assert_eq!(m.coeff(9), c(0.0));
        assert_eq!(m.padded(5).degree_cap(), 5);
        assert_eq!(m.padded(1).degree_cap(), 3);
    }

    #[test]
    fn arithmetic() {
        let p = TruncatedSeries::from_real(&[1.0, 2.0]);
        let q = TruncatedSeries::from_real(&[0.0, 0.0, 3.0]);
        assert_eq!((&p + &q).coeffs(), TruncatedSeries::from_real(&[1.0, 2.0, 3.0]).coeffs());
        assert_eq!((&p - &p).degree_cap(), 1);
        assert!((&p - &p).is_zero());
        let prod = &p * &p;
        assert_eq!(prod.coeffs(), TruncatedSeries::from_real(&[1.0, 4.0, 4.0]).coeffs());
        let z = Complex64::new(0.3, -1.2);
        assert!((prod.eval(z) - p.eval(z) * p.eval(z)).norm() < 1e-14);
        assert_eq!((-&p).coeff(1), c(-2.0));
    }
}
