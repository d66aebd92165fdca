//! Blaschke-power maps, the parabolic sequence built from them, and the
//! two-generator monomial semigroup with its invariant union of circles.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::Verdict;
use crate::error::{DwError, Result};
use crate::poly::Polynomial;
use crate::rational::RationalMap;
use crate::semigroup::{enumerate, Dedup, GeneratorSet, MapHandle, Word};
use crate::sphere::{chordal_distance, SpherePoint};

/// Tolerance used by the theorem verifiers in this module.
pub const VERIFY_TOL: f64 = 1e-9;

/// `(z^k + a) / (1 + conj(a) z^k)` with `k >= 2` and `0 < |a| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlaschkePowerParams {
    pub k: usize,
    pub a: Complex64,
}

impl BlaschkePowerParams {
    pub fn new(k: usize, a: Complex64) -> Result<Self> {
        if k < 2 {
            return Err(DwError::InvalidParameter(format!("k must be >= 2, got {k}")));
        }
        let m = a.norm();
        if !(m > 0.0 && m < 1.0) {
            return Err(DwError::InvalidParameter(format!("|a| must lie in (0, 1), got {m}")));
        }
        Ok(BlaschkePowerParams { k, a })
    }

    /// The unimodular point `a / |a|`.
    pub fn direction(&self) -> Complex64 {
        self.a / self.a.norm()
    }
}

pub fn blaschke_power(params: &BlaschkePowerParams) -> Result<RationalMap> {
    let BlaschkePowerParams { k, a } = *params;
    let one = Complex64::new(1.0, 0.0);
    let num = &Polynomial::constant(a) + &Polynomial::monomial(one, k);
    let den = &Polynomial::constant(one) + &Polynomial::monomial(a.conj(), k);
    RationalMap::new(num, den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnimodularReport {
    pub params: BlaschkePowerParams,
    pub u: Complex64,
    /// `|u^(k-1) - 1|`.
    pub root_residual: f64,
    pub root_of_unity: bool,
    /// Chordal distance between `f(u)` and `u`.
    pub fixed_residual: f64,
    pub fixed: bool,
    pub agree: bool,
    pub tol: f64,
    pub verdict: Verdict,
}

/// Checks that `a/|a|` is fixed exactly when it is a `(k-1)`th root of unity.
pub fn verify_unimodular_fixed_point(params: &BlaschkePowerParams) -> Result<UnimodularReport> {
    let f = blaschke_power(params)?;
    let u = params.direction();
    let root_residual = (u.powi(params.k as i32 - 1) - 1.0).norm();
    let fixed_residual = chordal_distance(f.eval_finite(u)?, SpherePoint::Finite(u));
    let root_of_unity = root_residual <= VERIFY_TOL;
    let fixed = fixed_residual <= VERIFY_TOL;
    Ok(UnimodularReport {
        params: *params,
        u,
        root_residual,
        root_of_unity,
        fixed_residual,
        fixed,
        agree: root_of_unity == fixed,
        tol: VERIFY_TOL,
        verdict: Verdict::from_bool(root_of_unity == fixed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParabolicReport {
    pub params: BlaschkePowerParams,
    pub multiplier: Option<Complex64>,
    /// `k (1 - |a|) / (1 + |a|)`.
    pub closed_form: f64,
    pub multiplier_matches: bool,
    /// Multiplier equal to 1.
    pub parabolic: bool,
    /// `|a| = (k-1)/(k+1)`.
    pub radius_criterion: bool,
    pub agree: bool,
    pub tol: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Checks the closed-form multiplier at `a/|a|` and that it equals 1 exactly
/// when `|a| = (k-1)/(k+1)`. Blocked when `a/|a|` is not a fixed point.
pub fn verify_parabolic_criterion(params: &BlaschkePowerParams) -> Result<ParabolicReport> {
    let k = params.k as f64;
    let m = params.a.norm();
    let closed_form = k * (1.0 - m) / (1.0 + m);
    let radius_criterion = (m - (k - 1.0) / (k + 1.0)).abs() <= VERIFY_TOL;
    let fixed = verify_unimodular_fixed_point(params)?;
    if !fixed.fixed {
        return Ok(ParabolicReport {
            params: *params,
            multiplier: None,
            closed_form,
            multiplier_matches: false,
            parabolic: false,
            radius_criterion,
            agree: false,
            tol: VERIFY_TOL,
            verdict: Verdict::Blocked,
            note: Some("a/|a| is not a fixed point".into()),
        });
    }
    let f = blaschke_power(params)?;
    let lambda = f
        .derivative_at(fixed.u)
        .ok_or(DwError::NonFinite)?;
    let multiplier_matches = (lambda - closed_form).norm() <= VERIFY_TOL;
    let parabolic = (lambda - 1.0).norm() <= VERIFY_TOL;
    let agree = parabolic == radius_criterion;
    Ok(ParabolicReport {
        params: *params,
        multiplier: Some(lambda),
        closed_form,
        multiplier_matches,
        parabolic,
        radius_criterion,
        agree,
        tol: VERIFY_TOL,
        verdict: Verdict::from_bool(multiplier_matches && agree),
        note: None,
    })
}

/// The primitive root `e^{2πi/m}`, exact for `m` in {1, 2, 4}.
pub fn primitive_root(m: usize) -> Complex64 {
    match m {
        1 => Complex64::new(1.0, 0.0),
        2 => Complex64::new(-1.0, 0.0),
        4 => Complex64::new(0.0, 1.0),
        _ => Complex64::from_polar(1.0, TAU / m as f64),
    }
}

/// Parabolic members `a_k = ((k-1)/(k+1)) e^{2πi/(k-1)}` for `k_min..=k_max`.
pub fn remark_sequence(k_min: usize, k_max: usize) -> Result<Vec<BlaschkePowerParams>> {
    if k_min < 2 || k_min > k_max {
        return Err(DwError::InvalidParameter(format!(
            "need 2 <= k_min <= k_max, got {k_min}..{k_max}"
        )));
    }
    (k_min..=k_max)
        .map(|k| {
            let r = (k - 1) as f64 / (k + 1) as f64;
            BlaschkePowerParams::new(k, primitive_root(k - 1) * r)
        })
        .collect()
}

/// `r` in (0, 1) for the generators `z^2/r` and `z^3/r^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonomialFamilyParams {
    pub r: f64,
}

impl MonomialFamilyParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(DwError::InvalidParameter(format!("r must lie in (0, 1), got {r}")));
        }
        Ok(MonomialFamilyParams { r })
    }
}

pub fn monomial_generators(params: &MonomialFamilyParams) -> Result<GeneratorSet> {
    let r = params.r;
    let f = RationalMap::polynomial(Polynomial::monomial(Complex64::new(1.0 / r, 0.0), 2))?;
    let g = RationalMap::polynomial(Polynomial::monomial(Complex64::new(1.0 / (r * r), 0.0), 3))?;
    GeneratorSet::with_labels(vec![f, g], vec![Some("z^2/r".into()), Some("z^3/r^2".into())])
}

/// `(a, j)` when `f(z) = a z^j` up to relative tolerance `tol`.
pub fn is_monomial_map(f: &RationalMap, tol: f64) -> Option<(Complex64, usize)> {
    if f.den().degree() != 0 {
        return None;
    }
    let scale = f.num().max_modulus();
    let big: Vec<usize> = f
        .num()
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > tol * scale)
        .map(|(i, _)| i)
        .collect();
    match big.as_slice() {
        [j] => Some((f.num().coeff(*j) / f.den().coeff(0), *j)),
        _ => None,
    }
}

/// `B = ∪ {|z| = r^j : 1 <= j <= max_j}`, kept as a membership predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleUnionB {
    pub r: f64,
    pub max_j: usize,
}

impl CircleUnionB {
    pub fn new(r: f64, max_j: usize) -> Result<Self> {
        MonomialFamilyParams::new(r)?;
        if max_j == 0 {
            return Err(DwError::InvalidParameter("max_j must be >= 1".into()));
        }
        Ok(CircleUnionB { r, max_j })
    }

    /// The circle index of a point given by `log |z|`, with no cap on `j`.
    pub fn circle_of_log(&self, log_modulus: f64) -> Option<usize> {
        let lr = self.r.ln();
        let j = (log_modulus / lr).round();
        if j >= 1.0 && (log_modulus - j * lr).abs() < VERIFY_TOL * lr.abs() {
            Some(j as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, z: Complex64) -> Option<usize> {
        self.circle_of_log(z.norm().ln()).filter(|&j| j <= self.max_j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementInvariance {
    pub word: Word,
    /// Exponent `l` of `z^l / r^(l-1)`, when the element is monomial.
    pub exponent: Option<usize>,
    /// Relative error of the coefficient against `r^(1-l)`.
    pub coefficient_error: Option<f64>,
    pub exponent_in_m: bool,
    pub circles_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BInvarianceReport {
    pub b: CircleUnionB,
    pub depth: usize,
    pub samples_per_circle: usize,
    pub elements: Vec<ElementInvariance>,
    pub samples_checked: usize,
    /// Largest `|log|h(z)| - j' log r| / |log r|` over all samples.
    pub max_exponent_residual: f64,
    pub failures: Vec<String>,
    pub tol: f64,
    pub verdict: Verdict,
}

// (log |a|, arg a, l) of a monomial element, folding pointwise factors analytically.
fn monomial_log_form(h: &MapHandle) -> Option<(f64, Complex64, usize)> {
    let mut log_a = 0.0;
    let mut phase = Complex64::new(1.0, 0.0);
    let mut l = 1usize;
    // h = f1 ∘ (f2 ∘ ...): fold from the innermost factor outward
    for f in h.factors().into_iter().rev() {
        let (a, j) = is_monomial_map(f, 1e-12)?;
        log_a = a.norm().ln() + j as f64 * log_a;
        phase = (a / a.norm()) * phase.powi(j as i32);
        l *= j;
    }
    Some((log_a, phase, l))
}

/// Checks that every element to `depth` is `z^l / r^(l-1)` with `l` divisible
/// by 2 or 3 and maps the circle `|z| = r^j` onto `|z| = r^(jl-l+1)`.
pub fn verify_b_invariance(
    gens: &GeneratorSet,
    b: &CircleUnionB,
    depth: usize,
    samples_per_circle: usize,
) -> Result<BInvarianceReport> {
    if samples_per_circle == 0 {
        return Err(DwError::InvalidParameter("samples_per_circle must be >= 1".into()));
    }
    let elements = enumerate(gens, depth, Dedup::Maps)?;
    let lr = b.r.ln();
    let mut report = BInvarianceReport {
        b: *b,
        depth,
        samples_per_circle,
        elements: Vec::with_capacity(elements.len()),
        samples_checked: 0,
        max_exponent_residual: 0.0,
        failures: Vec::new(),
        tol: VERIFY_TOL,
        verdict: Verdict::Pass,
    };

    for e in &elements {
        let Some((log_a, _, l)) = monomial_log_form(&e.map) else {
            report.failures.push(format!("{} is not monomial", e.word));
            report.elements.push(ElementInvariance {
                word: e.word.clone(),
                exponent: None,
                coefficient_error: None,
                exponent_in_m: false,
                circles_ok: false,
            });
            continue;
        };
        // |a| = r^(1-l), compared in log space
        let expected_log = (1.0 - l as f64) * lr;
        let coefficient_error = ((log_a - expected_log).exp() - 1.0).abs();
        let in_m = l % 2 == 0 || l % 3 == 0;
        if coefficient_error > VERIFY_TOL {
            report
                .failures
                .push(format!("{}: coefficient off r^(1-l) by {coefficient_error:e}", e.word));
        }
        if !in_m {
            report.failures.push(format!("{}: exponent {l} divisible by neither 2 nor 3", e.word));
        }

        let mut circles_ok = true;
        for j in 1..=b.max_j {
            let expect = j * l - l + 1;
            for s in 0..samples_per_circle {
                let z = Complex64::from_polar(b.r.powi(j as i32), TAU * s as f64 / samples_per_circle as f64);
                let log_h = log_a + l as f64 * z.norm().ln();
                report.samples_checked += 1;
                let got = b.circle_of_log(log_h);
                let jp = (log_h / lr).round();
                report.max_exponent_residual =
                    report.max_exponent_residual.max((log_h - jp * lr).abs() / lr.abs());
                if got != Some(expect) {
                    circles_ok = false;
                    report.failures.push(format!(
                        "{} maps circle {j} to log-modulus {log_h}, expected circle {expect}",
                        e.word
                    ));
                    break;
                }
                // direct evaluation agrees wherever it does not underflow
                if let Ok(SpherePoint::Finite(w)) = e.map.eval_finite(z) {
                    let m = w.norm();
                    if m > 1e-300 && (m.ln() - log_h).abs() > 1e-9 * lr.abs() * (1.0 + expect as f64) {
                        circles_ok = false;
                        report.failures.push(format!(
                            "{} at {z}: direct modulus {m:e} disagrees with log-space value",
                            e.word
                        ));
                        break;
                    }
                }
            }
        }
        report.elements.push(ElementInvariance {
            word: e.word.clone(),
            exponent: Some(l),
            coefficient_error: Some(coefficient_error),
            exponent_in_m: in_m,
            circles_ok,
        });
    }
    report.verdict = Verdict::from_bool(report.failures.is_empty());
    Ok(report)
}
