//! Dense complex polynomials in ascending-power order.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DwError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Relative modulus below which a leading coefficient is dropped.
pub const DEFAULT_TRIM: f64 = 1e-12;

/// A polynomial `c[0] + c[1] z + ... + c[n] z^n`.
///
/// The leading coefficient is never negligible relative to the largest one;
/// the zero polynomial has no coefficients at all.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self::with_trim(coeffs, DEFAULT_TRIM)
    }

    pub fn with_trim(mut coeffs: Vec<Complex64>, trim: f64) -> Self {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while let Some(last) = coeffs.last() {
            if last.norm() <= trim * scale || last.norm() == 0.0 {
                coeffs.pop();
            } else {
                break;
            }
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `c z^n`
    pub fn monomial(c: Complex64, n: usize) -> Self {
        let mut coeffs = vec![ZERO; n + 1];
        coeffs[n] = c;
        Self::new(coeffs)
    }

    /// The identity polynomial `z`.
    pub fn z() -> Self {
        Self::monomial(ONE, 1)
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots.iter().fold(Self::constant(ONE), |acc, &r| {
            &acc * &Polynomial::new(vec![-r, ONE])
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn coeff(&self, i: usize) -> Complex64 {
        self.coeffs.get(i).copied().unwrap_or(ZERO)
    }

    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum |c_i| |z|^i`, the natural scale of `p(z)` for backward-error tests.
    pub fn abs_eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect();
        Polynomial { coeffs }
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut result = Self::constant(ONE);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Coefficients of `z^d p(1/z)`, padded to length `d + 1`.
    pub fn reversed(&self, d: usize) -> Self {
        debug_assert!(self.is_zero() || self.degree() <= d);
        let mut coeffs = vec![ZERO; d + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[d - i] = c;
        }
        Self::new(coeffs)
    }

    /// Quotient of synthetic division by `(z - r)`; the remainder is dropped.
    pub fn deflate(&self, r: Complex64) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::zero();
        }
        let mut q = vec![ZERO; n - 1];
        let mut acc = ZERO;
        for i in (1..n).rev() {
            acc = acc * r + self.coeffs[i];
            q[i - 1] = acc;
        }
        Polynomial::new(q)
    }

    /// Number of exactly vanishing low-order coefficients, i.e. the multiplicity of the root 0.
    pub fn zero_root_multiplicity(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.norm() == 0.0).count()
    }

    pub fn divide_by_z_power(&self, k: usize) -> Self {
        Polynomial::new(self.coeffs.iter().skip(k).copied().collect())
    }

    /// All roots with multiplicity; see [`crate::roots::find_roots`].
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        crate::roots::find_roots(self)
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(DwError::NonFinite)
        }
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn trims_negligible_leading_terms() {
        let p = Polynomial::new(vec![c(1.0), c(2.0), c(1e-14)]);
        assert_eq!(p.degree(), 1);
        assert!(Polynomial::new(vec![c(0.0), c(0.0)]).is_zero());
    }

    #[test]
    fn horner_with_derivative() {
        // 1 + 2z + 3z^2 at z = 2: 17, derivative 2 + 6z = 14
        let p = Polynomial::from_real(&[1.0, 2.0, 3.0]);
        let (v, d) = p.eval_with_derivative(c(2.0));
        assert_eq!(v, c(17.0));
        assert_eq!(d, c(14.0));
    }

    #[test]
    fn multiplication_and_power() {
        let p = Polynomial::from_real(&[1.0, 1.0]);
        assert_eq!(p.pow(3), Polynomial::from_real(&[1.0, 3.0, 3.0, 1.0]));
        assert_eq!(&p * &Polynomial::zero(), Polynomial::zero());
    }

    #[test]
    fn deflation_removes_a_root() {
        let p = Polynomial::from_roots(&[c(1.0), c(-2.0), c(3.0)]);
        let q = p.deflate(c(-2.0));
        assert_eq!(q, Polynomial::from_roots(&[c(1.0), c(3.0)]));
    }

    #[test]
    fn reversal_pads_to_degree() {
        let p = Polynomial::from_real(&[0.0, 0.0, 1.0]);
        assert_eq!(p.reversed(2), Polynomial::from_real(&[1.0]));
        let q = Polynomial::from_real(&[1.0]);
        assert_eq!(q.reversed(2), Polynomial::from_real(&[0.0, 0.0, 1.0]));
    }
}
