//! Rational maps of the Riemann sphere.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{DwError, Result};
use crate::poly::Polynomial;
use crate::roots::{backward_error, find_roots_with};
use crate::sphere::{chordal_distance, SpherePoint};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `num / den` with no common roots (up to the common-root tolerance).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalMap {
    num: Polynomial,
    den: Polynomial,
}

/// Dynamical type of a fixed point, read off its multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierClass {
    Superattracting,
    Attracting,
    Parabolic,
    IndifferentNonparabolic,
    Repelling,
}

impl MultiplierClass {
    pub fn of(multiplier: Complex64, tol: &Tolerances) -> Self {
        let m = multiplier.norm();
        if m < tol.super_attracting {
            MultiplierClass::Superattracting
        } else if m < 1.0 - tol.multiplier {
            MultiplierClass::Attracting
        } else if m > 1.0 + tol.multiplier {
            MultiplierClass::Repelling
        } else if near_root_of_unity(multiplier, tol.max_root_of_unity_order, tol.multiplier) {
            MultiplierClass::Parabolic
        } else {
            MultiplierClass::IndifferentNonparabolic
        }
    }

    /// Attracting in the wide sense: orbits can converge to such a point.
    pub fn can_attract(self) -> bool {
        matches!(
            self,
            MultiplierClass::Superattracting | MultiplierClass::Attracting | MultiplierClass::Parabolic
        )
    }
}

fn near_root_of_unity(lambda: Complex64, max_order: u32, tol: f64) -> bool {
    let theta = lambda.arg();
    (1..=max_order).any(|q| {
        let k = (theta * q as f64 / TAU).round();
        (lambda - Complex64::from_polar(1.0, TAU * k / q as f64)).norm() <= tol
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointInfo {
    pub location: SpherePoint,
    /// `f'(z0)`; at infinity, the multiplier of `w -> 1/f(1/w)` at 0.
    pub multiplier: Complex64,
    pub class: MultiplierClass,
    pub multiplicity: usize,
}

impl RationalMap {
    /// Builds `num / den`, cancelling common roots.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        Self::new_with(num, den, &Tolerances::default())
    }

    pub fn new_with(num: Polynomial, den: Polynomial, tol: &Tolerances) -> Result<Self> {
        num.check_finite()?;
        den.check_finite()?;
        if den.is_zero() {
            return Err(DwError::ZeroDenominator);
        }
        let (num, den) = cancel_common_roots(num, den, tol)?;
        Ok(RationalMap { num, den })
    }

    /// Assumes `num` and `den` are coprime, e.g. for compositions of reduced maps.
    pub(crate) fn from_coprime(num: Polynomial, den: Polynomial) -> Result<Self> {
        num.check_finite()?;
        den.check_finite()?;
        if den.is_zero() {
            return Err(DwError::ZeroDenominator);
        }
        Ok(RationalMap { num, den })
    }

    pub fn polynomial(p: Polynomial) -> Result<Self> {
        Self::from_coprime(p, Polynomial::constant(ONE))
    }

    pub fn identity() -> Self {
        RationalMap {
            num: Polynomial::z(),
            den: Polynomial::constant(ONE),
        }
    }

    /// `(a z + b) / (c z + d)`
    pub fn mobius(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(DwError::InvalidParameter("mobius map with ad - bc = 0".into()));
        }
        Self::from_coprime(Polynomial::new(vec![b, a]), Polynomial::new(vec![d, c]))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn degree(&self) -> usize {
        let dn = if self.num.is_zero() { 0 } else { self.num.degree() };
        dn.max(self.den.degree())
    }

    pub fn is_mobius(&self) -> bool {
        self.degree() == 1
    }

    pub fn eval(&self, z: SpherePoint) -> Result<SpherePoint> {
        match z {
            SpherePoint::Finite(z) => self.eval_finite(z),
            SpherePoint::Infinity => Ok(self.value_at_infinity()),
        }
    }

    pub fn eval_finite(&self, z: Complex64) -> Result<SpherePoint> {
        if z.norm_sqr() > 1.0 {
            return Ok(self.eval_reversed(z));
        }
        let n = self.num.eval(z);
        let d = self.den.eval(z);
        if d.norm_sqr() == 0.0 {
            if n.norm_sqr() == 0.0 {
                return self.limit_at(z);
            }
            return Ok(SpherePoint::Infinity);
        }
        Ok(SpherePoint::from_complex(n / d))
    }

    // f(z) = z^(p - q) * num_rev(1/z) / den_rev(1/z), which does not overflow for large |z|.
    fn eval_reversed(&self, z: Complex64) -> SpherePoint {
        let p = self.num.degree();
        let q = self.den.degree();
        let w = z.inv();
        let nr = self.num.coeffs().iter().fold(ZERO, |acc, &c| acc * w + c);
        let dr = self.den.coeffs().iter().fold(ZERO, |acc, &c| acc * w + c);
        if self.num.is_zero() {
            return SpherePoint::ZERO;
        }
        if dr.norm_sqr() == 0.0 {
            if nr.norm_sqr() == 0.0 {
                return self.limit_at(z).unwrap_or(SpherePoint::Infinity);
            }
            return SpherePoint::Infinity;
        }
        let ratio = nr / dr;
        let value = if p >= q {
            ratio * z.powi((p - q) as i32)
        } else {
            ratio * w.powi((q - p) as i32)
        };
        SpherePoint::from_complex(value)
    }

    // 0/0 resolved by differentiating both polynomials until one side is non-zero.
    fn limit_at(&self, z: Complex64) -> Result<SpherePoint> {
        let mut n = self.num.clone();
        let mut d = self.den.clone();
        for _ in 0..=self.degree() {
            n = n.derivative();
            d = d.derivative();
            let nv = n.eval(z);
            let dv = d.eval(z);
            match (nv.norm_sqr() == 0.0, dv.norm_sqr() == 0.0) {
                (true, true) => continue,
                (false, true) => return Ok(SpherePoint::Infinity),
                _ => return Ok(SpherePoint::from_complex(nv / dv)),
            }
        }
        Err(DwError::IndeterminateValue { at: z })
    }

    pub fn value_at_infinity(&self) -> SpherePoint {
        let p = if self.num.is_zero() { 0 } else { self.num.degree() };
        let q = self.den.degree();
        if self.num.is_zero() || p < q {
            SpherePoint::ZERO
        } else if p > q {
            SpherePoint::Infinity
        } else {
            SpherePoint::from_complex(self.num.leading() / self.den.leading())
        }
    }

    /// `f'(z)` at a finite point; `None` at a pole.
    pub fn derivative_at(&self, z: Complex64) -> Option<Complex64> {
        let (n, dn) = self.num.eval_with_derivative(z);
        let (d, dd) = self.den.eval_with_derivative(z);
        if d.norm_sqr() == 0.0 {
            return None;
        }
        let v = (dn * d - n * dd) / (d * d);
        v.is_finite().then_some(v)
    }

    /// `w -> 1/f(1/w)`, the map in the chart at infinity.
    pub fn conjugate_at_infinity(&self) -> Result<RationalMap> {
        let d = self.degree();
        Self::from_coprime(self.den.reversed(d), self.num.reversed(d))
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &RationalMap) -> Result<RationalMap> {
        self.compose_with(inner, &Tolerances::default())
    }

    pub fn compose_with(&self, inner: &RationalMap, tol: &Tolerances) -> Result<RationalMap> {
        let d = self.degree();
        let degree = d * inner.degree();
        if degree > tol.max_degree {
            return Err(DwError::DegreeOverflow { degree, cap: tol.max_degree });
        }
        // num(P/Q) = sum a_i P^i Q^(d-i) / Q^d, likewise for den
        let p = &inner.num;
        let q = &inner.den;
        let mut p_pows = vec![Polynomial::constant(ONE)];
        let mut q_pows = vec![Polynomial::constant(ONE)];
        for i in 1..=d {
            p_pows.push(&p_pows[i - 1] * p);
            q_pows.push(&q_pows[i - 1] * q);
        }
        let homogenize = |outer: &Polynomial| {
            let mut acc = Polynomial::zero();
            for (i, &a) in outer.coeffs().iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let term = (&p_pows[i] * &q_pows[d - i]).scale(a);
                acc = &acc + &term;
            }
            acc
        };
        let num = Polynomial::with_trim(homogenize(&self.num).coeffs().to_vec(), tol.trim);
        let den = Polynomial::with_trim(homogenize(&self.den).coeffs().to_vec(), tol.trim);
        Self::from_coprime(num, den)
    }

    /// `f' = (P'Q - PQ') / Q^2`
    pub fn derivative(&self) -> Result<RationalMap> {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        let den = &self.den * &self.den;
        if num.is_zero() {
            return Self::from_coprime(Polynomial::zero(), Polynomial::constant(ONE));
        }
        Self::new(num, den)
    }

    /// Inverse of a degree-one map.
    pub fn mobius_inverse(&self) -> Result<RationalMap> {
        if !self.is_mobius() {
            return Err(DwError::InvalidParameter("only degree-one maps are invertible".into()));
        }
        let (b, a) = (self.num.coeff(0), self.num.coeff(1));
        let (d, c) = (self.den.coeff(0), self.den.coeff(1));
        RationalMap::mobius(d, -b, -c, a)
    }

    /// Rescales so the largest-modulus coefficient over `num` and `den` is exactly 1.
    pub fn normalized(&self) -> RationalMap {
        let pivot = self.pivot();
        let s = pivot.inv();
        RationalMap {
            num: self.num.scale(s),
            den: self.den.scale(s),
        }
    }

    // first coefficient (num ascending, then den ascending) of maximal modulus
    fn pivot(&self) -> Complex64 {
        self.pivot_index().1
    }

    fn pivot_index(&self) -> (usize, Complex64) {
        let all: Vec<Complex64> = self.num.coeffs().iter().chain(self.den.coeffs()).copied().collect();
        let max = all.iter().map(|c| c.norm()).fold(0.0, f64::max);
        all.iter()
            .enumerate()
            .find(|(_, c)| c.norm() >= max * (1.0 - 1e-12))
            .map(|(i, &c)| (i, c))
            .unwrap_or((0, ONE))
    }

    /// Coefficient-wise equality up to a common scalar.
    pub fn approx_eq(&self, other: &RationalMap, tol: f64) -> bool {
        if self.num.coeffs().len() != other.num.coeffs().len()
            || self.den.coeffs().len() != other.den.coeffs().len()
        {
            return false;
        }
        let (idx, pivot) = self.pivot_index();
        let other_all: Vec<Complex64> = other.num.coeffs().iter().chain(other.den.coeffs()).copied().collect();
        let counterpart = other_all[idx];
        if counterpart.norm() == 0.0 {
            return false;
        }
        let (sa, sb) = (pivot.inv(), counterpart.inv());
        self.num
            .coeffs()
            .iter()
            .chain(self.den.coeffs())
            .zip(other_all.iter())
            .all(|(&a, &b)| (a * sa - b * sb).norm() <= tol)
    }

    pub fn fixed_points(&self) -> Result<Vec<FixedPointInfo>> {
        self.fixed_points_with(&Tolerances::default())
    }

    /// All fixed points on the sphere with multiplicities summing to `degree + 1`.
    pub fn fixed_points_with(&self, tol: &Tolerances) -> Result<Vec<FixedPointInfo>> {
        let h = &self.num - &(&Polynomial::z() * &self.den);
        if h.is_zero() {
            return Err(DwError::InvalidParameter("the identity map has no isolated fixed points".into()));
        }
        let d = self.degree();
        let mut out = Vec::new();
        if h.degree() >= 1 {
            let roots = find_roots_with(&h, tol)?;
            for (z, m) in cluster_roots(&h, roots) {
                let multiplier = self.derivative_at(z).unwrap_or(Complex64::new(f64::INFINITY, 0.0));
                out.push(FixedPointInfo {
                    location: SpherePoint::Finite(z),
                    multiplier,
                    class: MultiplierClass::of(multiplier, tol),
                    multiplicity: m,
                });
            }
        }
        let at_infinity = (d + 1).saturating_sub(h.degree());
        if at_infinity > 0 {
            let chart = self.conjugate_at_infinity()?;
            let multiplier = chart.derivative_at(ZERO).unwrap_or(Complex64::new(f64::INFINITY, 0.0));
            out.push(FixedPointInfo {
                location: SpherePoint::Infinity,
                multiplier,
                class: MultiplierClass::of(multiplier, tol),
                multiplicity: at_infinity,
            });
        }
        Ok(out)
    }

    /// Critical points with multiplicity: `2 deg - 2` entries.
    pub fn critical_points(&self) -> Result<Vec<SpherePoint>> {
        let d = self.degree();
        if d < 2 {
            return Err(DwError::InvalidParameter("critical points need degree >= 2".into()));
        }
        let w = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        let mut out: Vec<SpherePoint> = if w.degree() >= 1 {
            find_roots_with(&w, &Tolerances::default())?
                .into_iter()
                .map(SpherePoint::Finite)
                .collect()
        } else {
            Vec::new()
        };
        let total = 2 * d - 2;
        while out.len() < total {
            out.push(SpherePoint::Infinity);
        }
        Ok(out)
    }
}

/// Removes roots shared by `num` and `den`.
fn cancel_common_roots(
    mut num: Polynomial,
    mut den: Polynomial,
    tol: &Tolerances,
) -> Result<(Polynomial, Polynomial)> {
    // common zero roots cancel exactly
    let zeros = num.zero_root_multiplicity().min(den.zero_root_multiplicity());
    if zeros > 0 && !num.is_zero() {
        num = num.divide_by_z_power(zeros);
        den = den.divide_by_z_power(zeros);
    }
    if num.is_zero() || num.degree() == 0 || den.degree() == 0 {
        return Ok((num, den));
    }
    let num_roots = find_roots_with(&num, tol)?;
    let mut den_roots = find_roots_with(&den, tol)?;
    for r in num_roots {
        let close = den_roots
            .iter()
            .enumerate()
            .map(|(j, s)| (j, (r - s).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((j, dist)) = close else { break };
        let s = den_roots[j];
        let mid = (r + s) * 0.5;
        let shared = dist <= tol.common_root * (1.0 + r.norm())
            || (dist <= 1e-4 * (1.0 + r.norm())
                && backward_error(&num, mid) <= tol.root_residual
                && backward_error(&den, mid) <= tol.root_residual);
        if shared {
            num = num.deflate(mid);
            den = den.deflate(mid);
            den_roots.swap_remove(j);
            if num.degree() == 0 || den.degree() == 0 {
                break;
            }
        }
    }
    Ok((num, den))
}

/// Groups numerically split multiple roots and polishes each group on the
/// appropriate derivative of `h`.
fn cluster_roots(h: &Polynomial, roots: Vec<Complex64>) -> Vec<(Complex64, usize)> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        let radius = 1e-4 * (1.0 + roots[i].norm());
        for j in (i + 1)..roots.len() {
            if !used[j] && (roots[j] - roots[i]).norm() <= radius {
                members.push(roots[j]);
                used[j] = true;
            }
        }
        let m = members.len();
        let centroid = members.iter().sum::<Complex64>() / m as f64;
        if m == 1 {
            out.push((roots[i], 1));
            continue;
        }
        if backward_error(h, centroid) > 1e-12 {
            // genuinely distinct nearby roots
            out.extend(members.into_iter().map(|z| (z, 1)));
            continue;
        }
        out.push((polish_multiple(h, centroid, m), m));
    }
    out
}

// Newton on h^(m-1), which has a simple root at an m-fold root of h.
fn polish_multiple(h: &Polynomial, start: Complex64, m: usize) -> Complex64 {
    let g = h.nth_derivative(m - 1);
    let mut z = start;
    for _ in 0..8 {
        let (v, dv) = g.eval_with_derivative(z);
        if dv.norm_sqr() == 0.0 {
            break;
        }
        let step = v / dv;
        if !step.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    if backward_error(h, z) <= backward_error(h, start).max(1e-14) {
        z
    } else {
        start
    }
}

impl FixedPointInfo {
    /// Chordal residual `d(f(p), p)`.
    pub fn residual(&self, f: &RationalMap) -> Result<f64> {
        Ok(chordal_distance(f.eval(self.location)?, self.location))
    }
}

impl<'de> Deserialize<'de> for RationalMap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            num: Polynomial,
            den: Polynomial,
        }
        let raw = Raw::deserialize(deserializer)?;
        RationalMap::new(raw.num, raw.den).map_err(serde::de::Error::custom)
    }
}
