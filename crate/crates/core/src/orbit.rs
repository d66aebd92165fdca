//! Orbit iteration and single-element Denjoy-Wolff point estimation.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DwTolerances, IterationBudget, Tolerances};
use crate::error::{DwError, Result};
use crate::rational::{FixedPointInfo, MultiplierClass};
use crate::semigroup::{MapHandle, Word};
use crate::sphere::{chordal_distance, SpherePoint};

/// Distance below which two orbit points count as a revisit when looking for cycles.
const CYCLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitStatus {
    Converged,
    Escaped,
    Cycling,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitResult {
    pub status: OrbitStatus,
    pub limit: Option<SpherePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<SpherePoint>>,
    pub iterations_used: usize,
    /// Set when the orbit was caught by the ball around an attracting fixed point.
    pub anchored: bool,
    pub period: Option<usize>,
    /// Last orbit point reached.
    pub last: SpherePoint,
}

/// Settings for one orbit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSettings {
    pub max_iter: usize,
    pub eps_step: f64,
    pub confirm: usize,
    pub escape_radius: f64,
    pub max_period: usize,
    pub anchor_radius: f64,
}

impl OrbitSettings {
    pub fn from_budget(budget: &IterationBudget) -> Self {
        OrbitSettings {
            max_iter: budget.max_iter,
            eps_step: budget.eps_step,
            confirm: budget.confirm.max(1),
            escape_radius: budget.escape_radius,
            max_period: budget.max_period,
            anchor_radius: budget.anchor_radius,
        }
    }
}

/// Iterates `f` from `z0` with default confirmation and cycle settings.
pub fn iterate_orbit(
    f: &MapHandle,
    z0: SpherePoint,
    max_iter: usize,
    eps_step: f64,
    escape_radius: f64,
) -> Result<OrbitResult> {
    let settings = OrbitSettings {
        max_iter,
        eps_step,
        escape_radius,
        ..OrbitSettings::from_budget(&IterationBudget::default())
    };
    run_orbit(f, z0, &settings, &[], false)
}

/// Like [`iterate_orbit`] but records every visited point.
pub fn iterate_orbit_traced(f: &MapHandle, z0: SpherePoint, settings: &OrbitSettings) -> Result<OrbitResult> {
    run_orbit(f, z0, settings, &[], true)
}

/// The first `n` iterates of `z0`, including `z0`, with no stopping rule.
pub fn orbit_points(f: &MapHandle, z0: SpherePoint, n: usize) -> Result<Vec<SpherePoint>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut z = z0;
    out.push(z);
    for _ in 0..n {
        z = f.eval(z)?;
        out.push(z);
    }
    Ok(out)
}

/// Core iteration loop. `anchors` are finite fixed points whose
/// `anchor_radius`-ball counts as capture once the distance to the anchor has
/// decreased for `confirm` consecutive steps.
pub fn run_orbit(
    f: &MapHandle,
    z0: SpherePoint,
    s: &OrbitSettings,
    anchors: &[Complex64],
    trace: bool,
) -> Result<OrbitResult> {
    let mut state = OrbitState::new(z0, s, trace)?;
    loop {
        if let Some(done) = state.step(f, s, anchors)? {
            return Ok(done);
        }
    }
}

/// Runs many orbits, stepping several in lockstep so their independent
/// evaluation chains overlap. Results are identical to [`run_orbit`].
pub fn run_orbits(
    f: &MapHandle,
    seeds: &[SpherePoint],
    s: &OrbitSettings,
    anchors: &[Complex64],
) -> Result<Vec<OrbitResult>> {
    const LANES: usize = 8;
    let chunks: Vec<Result<Vec<OrbitResult>>> = seeds
        .par_chunks(LANES)
        .map(|chunk| {
            let mut states = chunk
                .iter()
                .map(|&z| OrbitState::new(z, s, false))
                .collect::<Result<Vec<_>>>()?;
            let mut out: Vec<Option<OrbitResult>> = vec![None; chunk.len()];
            let mut active: Vec<usize> = (0..chunk.len()).collect();
            while !active.is_empty() {
                let mut k = 0;
                while k < active.len() {
                    let lane = active[k];
                    if let Some(done) = states[lane].step(f, s, anchors)? {
                        out[lane] = Some(done);
                        active.swap_remove(k);
                    } else {
                        k += 1;
                    }
                }
            }
            Ok(out.into_iter().map(|r| r.expect("every lane finishes")).collect())
        })
        .collect();
    let mut all = Vec::with_capacity(seeds.len());
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

struct OrbitState {
    z: Complex64,
    n: usize,
    small_steps: usize,
    // (anchor index, previous squared distance, consecutive decreases)
    anchor: Option<(usize, f64, usize)>,
    ring: Vec<SpherePoint>,
    trace: Option<Vec<SpherePoint>>,
    pending: Option<OrbitResult>,
}

impl OrbitState {
    fn new(z0: SpherePoint, s: &OrbitSettings, trace: bool) -> Result<Self> {
        if s.max_iter == 0 {
            return Err(DwError::InvalidParameter("max_iter must be >= 1".into()));
        }
        let trace = trace.then(|| vec![z0]);
        let pending = match z0 {
            SpherePoint::Finite(w) if w.norm_sqr() <= s.escape_radius * s.escape_radius => None,
            _ => Some(OrbitResult {
                status: OrbitStatus::Escaped,
                limit: None,
                trace: trace.clone(),
                iterations_used: 0,
                anchored: false,
                period: None,
                last: z0,
            }),
        };
        Ok(OrbitState {
            z: z0.finite().unwrap_or_default(),
            n: 0,
            small_steps: 0,
            anchor: None,
            ring: vec![z0; s.max_period + s.confirm + 1],
            trace,
            pending,
        })
    }

    fn finish(&mut self, status: OrbitStatus, limit: Option<SpherePoint>, last: SpherePoint) -> OrbitResult {
        OrbitResult {
            status,
            limit,
            trace: self.trace.take(),
            iterations_used: self.n,
            anchored: false,
            period: None,
            last,
        }
    }

    /// Advances one iteration; returns the result once the orbit is decided.
    #[inline]
    fn step(&mut self, f: &MapHandle, s: &OrbitSettings, anchors: &[Complex64]) -> Result<Option<OrbitResult>> {
        if let Some(done) = self.pending.take() {
            return Ok(Some(done));
        }
        self.n += 1;
        let n = self.n;
        let next = f.eval_finite(self.z)?;
        if let Some(t) = self.trace.as_mut() {
            t.push(next);
        }
        let w = match next {
            SpherePoint::Finite(w) if w.norm_sqr() <= s.escape_radius * s.escape_radius => w,
            _ => return Ok(Some(self.finish(OrbitStatus::Escaped, None, next))),
        };
        let z = self.z;
        let step_sq = 4.0 * (w - z).norm_sqr() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr()));
        self.z = w;

        if step_sq < s.eps_step * s.eps_step {
            self.small_steps += 1;
            if self.small_steps >= s.confirm {
                return Ok(Some(self.finish(OrbitStatus::Converged, Some(next), next)));
            }
        } else {
            self.small_steps = 0;
        }

        if !anchors.is_empty() {
            let anchor_sq = s.anchor_radius * s.anchor_radius;
            self.anchor = match self.anchor {
                Some((i, prev, count)) => {
                    let d = (w - anchors[i]).norm_sqr();
                    if d >= anchor_sq {
                        None
                    } else if d < prev {
                        Some((i, d, count + 1))
                    } else {
                        Some((i, d, 0))
                    }
                }
                None => anchors
                    .iter()
                    .position(|&p| (w - p).norm_sqr() < anchor_sq)
                    .map(|i| (i, (w - anchors[i]).norm_sqr(), 0)),
            };
            if let Some((i, _, count)) = self.anchor {
                if count >= s.confirm {
                    let mut done = self.finish(OrbitStatus::Converged, Some(SpherePoint::Finite(anchors[i])), next);
                    done.anchored = true;
                    return Ok(Some(done));
                }
            }
        }

        let len = self.ring.len();
        self.ring[n % len] = next;
        // cycle search is cheap when done only every max_period steps
        if s.max_period >= 2 && n.is_multiple_of(s.max_period) && n >= len && step_sq >= s.eps_step {
            if let Some(p) = detect_cycle(&self.ring, n, s.max_period, s.confirm) {
                let mut done = self.finish(OrbitStatus::Cycling, None, next);
                done.period = Some(p);
                return Ok(Some(done));
            }
        }
        if n >= s.max_iter {
            return Ok(Some(self.finish(OrbitStatus::BudgetExhausted, None, next)));
        }
        Ok(None)
    }
}

// Smallest period p >= 2 such that the last `confirm` points each match the point p steps earlier.
// `ring` holds iterate m at index m % ring.len(); `n` is the newest index.
fn detect_cycle(ring: &[SpherePoint], n: usize, max_period: usize, confirm: usize) -> Option<usize> {
    let len = ring.len();
    let at = |m: usize| ring[m % len];
    (2..=max_period).find(|&p| (0..confirm).all(|j| chordal_distance(at(n - j), at(n - j - p)) < CYCLE_TOL))
}

/// Seed points in the open unit disk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiskGrid {
    points: Vec<Complex64>,
    seed: u64,
}

impl DiskGrid {
    /// 12 circles of radii 0.05 to 0.93 with 16 angles each, plus 32 random points.
    pub fn standard(seed: u64) -> Self {
        Self::with_density(12, 16, 32, seed)
    }

    pub fn with_density(circles: usize, angles: usize, random: usize, seed: u64) -> Self {
        let mut points = Vec::with_capacity(circles * angles + random);
        for c in 0..circles {
            let r = if circles == 1 { 0.5 } else { 0.05 + 0.88 * c as f64 / (circles - 1) as f64 };
            for a in 0..angles {
                points.push(Complex64::from_polar(r, TAU * a as f64 / angles as f64));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while points.len() < circles * angles + random {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if z.norm() < 0.95 {
                points.push(z);
            }
        }
        DiskGrid { points, seed }
    }

    pub fn from_points(points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(DwError::InvalidParameter("grid is empty".into()));
        }
        if points.iter().any(|z| z.norm() >= 1.0 || z.is_nan()) {
            return Err(DwError::InvalidParameter("grid points must lie in the open unit disk".into()));
        }
        Ok(DiskGrid { points, seed: 0 })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DwStatus {
    DwFound,
    NoDw,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocationClass {
    Interior,
    Boundary,
}

impl LocationClass {
    pub fn of(p: Complex64, tol_bd: f64) -> Self {
        if (p.norm() - 1.0).abs() <= tol_bd {
            LocationClass::Boundary
        } else {
            LocationClass::Interior
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DWReport {
    pub word: Option<Word>,
    pub status: DwStatus,
    pub point: Option<SpherePoint>,
    pub location_class: Option<LocationClass>,
    pub anchor: Option<FixedPointInfo>,
    pub samples_agreeing: usize,
    pub samples: usize,
    /// Why the verdict is not dw-found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Everything [`dw_point_single`] needs besides the map and grid.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DwSettings {
    pub tolerances: Tolerances,
    pub budget: IterationBudget,
    pub dw: DwTolerances,
}

/// Fixed points of `f` in the closed disk that can attract orbits.
pub fn disk_anchors(f: &MapHandle, settings: &DwSettings) -> Vec<FixedPointInfo> {
    let Some(map) = f.composed() else {
        return Vec::new();
    };
    match map.fixed_points_with(&settings.tolerances) {
        Ok(fps) => fps
            .into_iter()
            .filter(|p| p.class.can_attract() && p.location.modulus() <= 1.0 + settings.dw.boundary)
            .collect(),
        Err(_) => Vec::new(),
    }
}

/// Estimates the Denjoy-Wolff point of one element by iterating every grid point.
pub fn dw_point_single(f: &MapHandle, grid: &DiskGrid, settings: &DwSettings) -> Result<DWReport> {
    if grid.is_empty() {
        return Err(DwError::InvalidParameter("grid is empty".into()));
    }
    let anchors_info = disk_anchors(f, settings);
    let anchors: Vec<Complex64> = anchors_info.iter().filter_map(|p| p.location.finite()).collect();
    let mut orbit = OrbitSettings::from_budget(&settings.budget);
    if anchors_info.iter().any(|p| p.class == MultiplierClass::Parabolic) {
        orbit.max_iter = orbit.max_iter.max(settings.budget.parabolic_max_iter);
    }

    let seeds: Vec<SpherePoint> = grid.points().iter().map(|&z| SpherePoint::Finite(z)).collect();
    let results = run_orbits(f, &seeds, &orbit, &anchors)?;

    Ok(verdict(&results, f, &anchors_info, settings))
}

fn verdict(results: &[OrbitResult], f: &MapHandle, anchors: &[FixedPointInfo], settings: &DwSettings) -> DWReport {
    let dw = &settings.dw;
    let mut report = DWReport {
        word: None,
        status: DwStatus::NoDw,
        point: None,
        location_class: None,
        anchor: None,
        samples_agreeing: 0,
        samples: results.len(),
        reason: None,
    };
    let no_dw = |mut r: DWReport, why: String| {
        r.reason = Some(why);
        r
    };

    if let Some(r) = results.iter().find(|r| r.status == OrbitStatus::Escaped) {
        return no_dw(report, format!("orbit escaped after {} iterations", r.iterations_used));
    }
    if let Some(r) = results.iter().find(|r| r.status == OrbitStatus::Cycling) {
        return no_dw(report, format!("orbit cycles with period {}", r.period.unwrap_or(0)));
    }
    let limits: Vec<Complex64> = results
        .iter()
        .filter_map(|r| r.limit)
        .map(|l| l.finite().unwrap_or(Complex64::new(f64::INFINITY, 0.0)))
        .collect();
    if let Some(l) = limits.iter().find(|l| l.norm() > 1.0 + dw.escape_margin || l.is_nan()) {
        return no_dw(report, format!("orbit converges outside the closed disk, to {l}"));
    }
    if let Some(&first) = limits.first() {
        let agreeing = limits.iter().filter(|l| (**l - first).norm() <= dw.agreement).count();
        report.samples_agreeing = agreeing;
        if agreeing < limits.len() {
            return no_dw(report, "orbits converge to different points".into());
        }
    }
    let exhausted = results.len() - limits.len();
    if exhausted > 0 {
        report.status = DwStatus::Inconclusive;
        report.reason = Some(format!("{exhausted} orbit(s) exhausted the iteration budget"));
        return report;
    }

    let n = limits.len() as f64;
    let mut p = limits.iter().sum::<Complex64>() / n;
    if p.norm() > 1.0 {
        p /= p.norm();
    }
    report.status = DwStatus::DwFound;
    report.point = Some(SpherePoint::Finite(p));
    report.location_class = Some(LocationClass::of(p, dw.boundary));
    report.anchor = anchors
        .iter()
        .filter(|a| chordal_distance(a.location, SpherePoint::Finite(p)) <= dw.agreement)
        .min_by(|a, b| {
            let da = chordal_distance(a.location, SpherePoint::Finite(p));
            let db = chordal_distance(b.location, SpherePoint::Finite(p));
            da.total_cmp(&db)
        })
        .copied();
    if report.anchor.is_none() {
        // late anchor match for limits found by the step criterion
        if let Some(map) = f.composed() {
            if let Ok(fps) = map.fixed_points_with(&settings.tolerances) {
                report.anchor = fps
                    .into_iter()
                    .find(|a| chordal_distance(a.location, SpherePoint::Finite(p)) <= dw.agreement);
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiskEvidence {
    pub preserves: bool,
    pub max_boundary_modulus: f64,
    pub argmax: Complex64,
    /// Largest `|f(z)|` over the interior samples.
    pub max_interior_modulus: f64,
    /// A pole in the closed disk, which rules out disk preservation.
    pub pole_in_closed_disk: Option<Complex64>,
    pub tol: f64,
}

/// Tests `f(D) ⊂ D` on uniformly spaced boundary samples and a spiral of
/// interior samples, after ruling out poles in the closed disk.
pub fn maps_disk_into_disk(
    f: &MapHandle,
    boundary_samples: usize,
    interior_samples: usize,
    tol: f64,
) -> Result<DiskEvidence> {
    if boundary_samples < 8 || interior_samples < 8 {
        return Err(DwError::InvalidParameter("sample counts must be >= 8".into()));
    }
    let mut pole = None;
    for factor in f.factors() {
        if factor.den().degree() >= 1 {
            let roots = factor.den().roots()?;
            if let Some(r) = roots.into_iter().find(|r| r.norm() <= 1.0 + tol) {
                pole = Some(r);
                break;
            }
        }
    }

    let modulus = |z: Complex64| -> Result<f64> { Ok(f.eval_finite(z)?.modulus()) };
    let mut max_b = f64::NEG_INFINITY;
    let mut argmax = Complex64::new(1.0, 0.0);
    for k in 0..boundary_samples {
        let z = Complex64::from_polar(1.0, TAU * k as f64 / boundary_samples as f64);
        let m = modulus(z)?;
        if m > max_b || m.is_nan() {
            max_b = m;
            argmax = z;
        }
    }
    let golden = TAU * (1.0 - 1.0 / 1.618_033_988_749_895);
    let mut max_i: f64 = 0.0;
    for k in 0..interior_samples {
        let r = ((k as f64 + 0.5) / interior_samples as f64).sqrt() * 0.999;
        let z = Complex64::from_polar(r, golden * k as f64);
        max_i = max_i.max(modulus(z)?);
    }
    let preserves = pole.is_none() && max_b <= 1.0 + tol && max_i < 1.0;
    Ok(DiskEvidence {
        preserves,
        max_boundary_modulus: max_b,
        argmax,
        max_interior_modulus: max_i,
        pole_in_closed_disk: pole,
        tol,
    })
}
