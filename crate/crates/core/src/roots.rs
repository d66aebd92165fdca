//! Simultaneous polynomial root finding (Aberth-Ehrlich iteration).
//!
//! Initial approximations are spread over the circles suggested by the upper
//! convex hull of `(i, log|c_i|)`, which keeps the iteration well behaved for
//! polynomials whose roots span many orders of magnitude.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{DwError, Result};
use crate::poly::Polynomial;

/// Angular offset applied to each initial circle.
const SIGMA: f64 = 0.7;

/// All `deg(p)` roots of `p`, repeated according to multiplicity.
pub fn find_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    find_roots_with(p, &Tolerances::default())
}

pub fn find_roots_with(p: &Polynomial, tol: &Tolerances) -> Result<Vec<Complex64>> {
    p.check_finite()?;
    if p.is_zero() || p.degree() == 0 {
        return Err(DwError::InvalidParameter(
            "root finding needs a polynomial of degree >= 1".into(),
        ));
    }
    let zeros = p.zero_root_multiplicity();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let q = p.divide_by_z_power(zeros);
    match q.degree() {
        0 => {}
        1 => roots.push(-q.coeff(0) / q.coeff(1)),
        _ => roots.extend(aberth(&q, tol)?),
    }
    Ok(roots)
}

/// Relative backward error of `z` as a root of `p`.
pub fn backward_error(p: &Polynomial, z: Complex64) -> f64 {
    let r = z.norm();
    let scale = p.abs_eval(r);
    if scale == 0.0 {
        return 0.0;
    }
    if r <= 1.0 {
        p.eval(z).norm() / scale
    } else {
        // evaluate z^-n p(z) to avoid overflow
        let n = p.degree();
        let w = z.inv();
        let rev = p.reversed(n);
        rev.eval(w).norm() / rev.abs_eval(w.norm())
    }
}

fn aberth(p: &Polynomial, tol: &Tolerances) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let lead = p.leading();
    let monic = Polynomial::new(p.coeffs().iter().map(|&c| c / lead).collect());
    let rev = monic.reversed(n);
    let d_monic = monic.derivative();
    let d_rev = rev.derivative();

    let mut z = initial_guesses(&monic);
    let mut done = vec![false; n];
    // rounding floor of Horner's scheme
    let floor = 4.0 * (n as f64 + 1.0) * f64::EPSILON;
    let stop = floor.max(f64::EPSILON);

    for _ in 0..tol.root_max_sweeps {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let (ratio, berr) = newton_ratio(&monic, &d_monic, &rev, &d_rev, zi);
            if berr <= stop {
                done[i] = true;
                continue;
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let diff = zi - zj;
                    if diff.norm_sqr() > 0.0 {
                        sum += diff.inv();
                    }
                }
            }
            let correction = if ratio.is_finite() {
                let denom = Complex64::new(1.0, 0.0) - ratio * sum;
                if denom.norm() == 0.0 { ratio } else { ratio / denom }
            } else {
                // stationary point of p: nudge off it
                Complex64::new(1e-3 * (1.0 + zi.norm()), 0.0)
            };
            let next = zi - correction;
            if !(next.re.is_finite() && next.im.is_finite()) {
                return Err(DwError::RootFindingDivergence { degree: n, sweeps: 0 });
            }
            z[i] = next;
            if correction.norm() <= f64::EPSILON * next.norm() {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }

    // Stagnation is only acceptable when the backward error meets the tolerance.
    for &zi in &z {
        if backward_error(&monic, zi) > tol.root_residual {
            return Err(DwError::RootFindingDivergence {
                degree: n,
                sweeps: tol.root_max_sweeps,
            });
        }
    }
    Ok(z)
}

/// Newton ratio `p(z)/p'(z)` and the backward error at `z`, computed through the
/// reversed polynomial when `|z| > 1`.
fn newton_ratio(
    p: &Polynomial,
    dp: &Polynomial,
    rev: &Polynomial,
    drev: &Polynomial,
    z: Complex64,
) -> (Complex64, f64) {
    let r = z.norm();
    if r <= 1.0 {
        let v = p.eval(z);
        let d = dp.eval(z);
        let scale = p.abs_eval(r);
        let berr = if scale > 0.0 { v.norm() / scale } else { 0.0 };
        (v / d, berr)
    } else {
        // p(z) = z^n q(w), p'(z) = z^(n-1) (n q(w) - w q'(w)),  w = 1/z
        let n = p.degree() as f64;
        let w = z.inv();
        let q = rev.eval(w);
        let dq = drev.eval(w);
        let scale = rev.abs_eval(w.norm());
        let berr = if scale > 0.0 { q.norm() / scale } else { 0.0 };
        (z * q / (q * n - w * dq), berr)
    }
}

fn initial_guesses(p: &Polynomial) -> Vec<Complex64> {
    let n = p.degree();
    let pts: Vec<(usize, f64)> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, c)| (i, c.norm().ln()))
        .collect();
    let hull = upper_hull(&pts);
    let mut z = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (i, li) = w[0];
        let (j, lj) = w[1];
        let count = j - i;
        let radius = ((li - lj) / count as f64).exp();
        for k in 0..count {
            let theta = TAU * k as f64 / count as f64 + TAU * i as f64 / n as f64 + SIGMA;
            z.push(Complex64::from_polar(radius, theta));
        }
    }
    z
}

fn upper_hull(pts: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut hull: Vec<(usize, f64)> = Vec::with_capacity(pts.len());
    for &pt in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            let cross = (x2 as f64 - x1 as f64) * (pt.1 - y1) - (y2 - y1) * (pt.0 as f64 - x1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    hull
}
