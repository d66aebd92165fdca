//! Julia set sampling by inverse iteration, disk intersection tests and rasterization.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DwError, Result};
use crate::rational::{MultiplierClass, RationalMap};
use crate::semigroup::{enumerate, Dedup, GeneratorSet, MapHandle, Word};
use crate::sphere::SpherePoint;

/// Discarded steps before samples are collected.
pub const BURN_IN: usize = 20;

/// Sampled points with the word (or map label) that produced each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSample {
    pub points: Vec<SpherePoint>,
    /// Index into `source_labels` for every point.
    pub sources: Vec<usize>,
    pub source_labels: Vec<String>,
    pub seed: u64,
}

impl PointSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn source_of(&self, i: usize) -> &str {
        &self.source_labels[self.sources[i]]
    }
}

/// Where inverse iteration starts: a repelling fixed point, else a repelling 2-cycle point.
pub fn repelling_seed(f: &RationalMap) -> Result<SpherePoint> {
    let pick = |g: &RationalMap| -> Result<Option<SpherePoint>> {
        let rep: Vec<SpherePoint> = g
            .fixed_points()?
            .into_iter()
            .filter(|p| p.class == MultiplierClass::Repelling)
            .map(|p| p.location)
            .collect();
        Ok(rep.iter().find(|p| !p.is_infinite()).or(rep.first()).copied())
    };
    if let Some(p) = pick(f)? {
        return Ok(p);
    }
    let ff = f.compose(f)?;
    pick(&ff)?.ok_or(DwError::NoRepellingFixedPoint)
}

// Finite preimages of `z`: roots of num(w) - z den(w), or of den when z is infinite.
fn preimages(f: &RationalMap, z: SpherePoint) -> Result<Vec<Complex64>> {
    let p = match z {
        SpherePoint::Finite(z) => f.num() - &f.den().scale(z),
        SpherePoint::Infinity => f.den().clone(),
    };
    if p.degree() == 0 {
        return Ok(Vec::new());
    }
    p.roots()
}

/// Inverse iteration from a repelling point with uniformly random branches.
pub fn julia_single(f: &RationalMap, n_points: usize, seed: u64) -> Result<PointSample> {
    julia_single_labeled(f, n_points, seed, "f".into())
}

fn julia_single_labeled(f: &RationalMap, n_points: usize, seed: u64, label: String) -> Result<PointSample> {
    if f.degree() < 2 {
        return Err(DwError::InvalidParameter("inverse iteration needs degree >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = repelling_seed(f)?;
    let mut points = Vec::with_capacity(n_points);
    for step in 0..BURN_IN + n_points {
        let pre = preimages(f, z)?;
        if pre.is_empty() {
            return Err(DwError::NonFinite);
        }
        z = SpherePoint::Finite(pre[rng.gen_range(0..pre.len())]);
        if step >= BURN_IN {
            points.push(z);
        }
    }
    Ok(PointSample {
        sources: vec![0; points.len()],
        points,
        source_labels: vec![label],
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedElement {
    pub word: Word,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupJulia {
    pub sample: PointSample,
    pub skipped: Vec<SkippedElement>,
    pub elements: usize,
    pub depth: usize,
}

/// Union of single-map samples over the deduplicated elements to `depth`.
/// Element `i` uses seed `seed + i`; elements past the degree cap are skipped.
pub fn julia_semigroup(gens: &GeneratorSet, depth: usize, points_per_element: usize, seed: u64) -> Result<SemigroupJulia> {
    let elements = enumerate(gens, depth, Dedup::Maps)?;
    let per: Vec<std::result::Result<PointSample, String>> = elements
        .par_iter()
        .enumerate()
        .map(|(i, e)| match &e.map {
            MapHandle::Composed(f) => {
                julia_single_labeled(f, points_per_element, seed.wrapping_add(i as u64), e.word.to_string())
                    .map_err(|err| err.to_string())
            }
            MapHandle::Pointwise(_) => Err("degree exceeds the composition cap".into()),
        })
        .collect();

    let mut sample = PointSample { points: Vec::new(), sources: Vec::new(), source_labels: Vec::new(), seed };
    let mut skipped = Vec::new();
    for (e, r) in elements.iter().zip(per) {
        match r {
            Ok(s) => {
                let idx = sample.source_labels.len();
                sample.source_labels.push(e.word.to_string());
                sample.sources.extend(std::iter::repeat_n(idx, s.points.len()));
                sample.points.extend(s.points);
            }
            Err(reason) => skipped.push(SkippedElement { word: e.word.clone(), reason }),
        }
    }
    Ok(SemigroupJulia { sample, skipped, elements: elements.len(), depth })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiskMeetsJulia {
    pub meets: bool,
    /// The sample point of least modulus.
    pub witness: SpherePoint,
    pub min_modulus: f64,
    pub tol: f64,
}

/// Whether some sample point has modulus below `1 - tol`.
pub fn disk_meets_julia(sample: &PointSample, tol: f64) -> Result<DiskMeetsJulia> {
    let witness = sample
        .points
        .iter()
        .copied()
        .min_by(|a, b| a.modulus().total_cmp(&b.modulus()))
        .ok_or_else(|| DwError::InvalidParameter("empty Julia sample".into()))?;
    let min_modulus = witness.modulus();
    Ok(DiskMeetsJulia { meets: min_modulus < 1.0 - tol, witness, min_modulus, tol })
}

/// Axis-aligned rectangle of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Bounds {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let b = Bounds { re_min, re_max, im_min, im_max };
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) && re_min < re_max && im_min < im_max;
        if ok {
            Ok(b)
        } else {
            Err(DwError::DegenerateBounds)
        }
    }

    pub fn square(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width)
    }
}

/// Per-pixel hit counts, row-major with row 0 at `im_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub bounds: Bounds,
    pub grid: Vec<u32>,
}

impl RasterImage {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.grid[y * self.width + x]
    }

    /// Binary portable graymap with counts clamped to 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.grid.iter().map(|&c| c.min(255) as u8));
        out
    }
}

pub fn rasterize(sample: &PointSample, width: usize, height: usize, bounds: Bounds) -> Result<RasterImage> {
    if width == 0 || height == 0 {
        return Err(DwError::InvalidParameter("image dimensions must be positive".into()));
    }
    let bounds = Bounds::new(bounds.re_min, bounds.re_max, bounds.im_min, bounds.im_max)?;
    let mut grid = vec![0u32; width * height];
    let sx = width as f64 / (bounds.re_max - bounds.re_min);
    let sy = height as f64 / (bounds.im_max - bounds.im_min);
    for p in &sample.points {
        let Some(z) = p.finite() else { continue };
        if z.re < bounds.re_min || z.re > bounds.re_max || z.im < bounds.im_min || z.im > bounds.im_max {
            continue;
        }
        let x = (((z.re - bounds.re_min) * sx) as usize).min(width - 1);
        let y = (((bounds.im_max - z.im) * sy) as usize).min(height - 1);
        grid[y * width + x] += 1;
    }
    Ok(RasterImage { width, height, bounds, grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    fn poly(c: &[f64]) -> RationalMap {
        RationalMap::polynomial(Polynomial::from_real(c)).unwrap()
    }

    #[test]
    fn circle_for_z_squared() {
        let s = julia_single(&poly(&[0.0, 0.0, 1.0]), 4096, 1).unwrap();
        assert_eq!(s.len(), 4096);
        assert!(s.points.iter().all(|p| (p.modulus() - 1.0).abs() < 1e-9));
        assert!(!disk_meets_julia(&s, 1e-6).unwrap().meets);
    }

    #[test]
    fn chebyshev_segment() {
        let s = julia_single(&poly(&[-2.0, 0.0, 1.0]), 2000, 3).unwrap();
        for p in &s.points {
            let z = p.finite().unwrap();
            assert!(z.im.abs() < 1e-6 && z.re.abs() <= 2.0 + 1e-6, "{z}");
        }
    }

    #[test]
    fn backward_orbit_is_sound() {
        let f = poly(&[1.0, 0.0, 1.0]);
        let s = julia_single(&f, 500, 9).unwrap();
        for w in s.points.windows(2) {
            let back = f.eval(w[1]).unwrap();
            assert!(crate::sphere::chordal_distance(back, w[0]) < 1e-6);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let f = poly(&[1.0, 0.0, 1.0]);
        assert_eq!(julia_single(&f, 100, 5).unwrap(), julia_single(&f, 100, 5).unwrap());
        assert_ne!(julia_single(&f, 100, 5).unwrap().points, julia_single(&f, 100, 6).unwrap().points);
    }

    #[test]
    fn z_squared_plus_one_meets_disk() {
        let s = julia_single(&poly(&[1.0, 0.0, 1.0]), 4096, 2).unwrap();
        let d = disk_meets_julia(&s, 1e-6).unwrap();
        assert!(d.meets, "{}", d.min_modulus);
    }

    #[test]
    fn single_generator_semigroup_matches_single_map() {
        let f = poly(&[1.0, 0.0, 1.0]);
        let gens = GeneratorSet::new(vec![f.clone()]).unwrap();
        let sj = julia_semigroup(&gens, 1, 256, 11).unwrap();
        assert_eq!(sj.sample.points, julia_single(&f, 256, 11).unwrap().points);
        assert_eq!(sj.sample.source_labels, ["(1)"]);
    }

    #[test]
    fn monomial_semigroup_circle() {
        let gens = GeneratorSet::new(vec![
            RationalMap::polynomial(Polynomial::monomial(Complex64::new(2.0, 0.0), 2)).unwrap(),
            RationalMap::polynomial(Polynomial::monomial(Complex64::new(4.0, 0.0), 3)).unwrap(),
        ])
        .unwrap();
        let sj = julia_semigroup(&gens, 2, 512, 0).unwrap();
        assert!(sj.skipped.is_empty());
        assert_eq!(sj.elements, 5);
        assert!(sj.sample.points.iter().all(|p| (p.modulus() - 0.5).abs() < 1e-6));
    }

    #[test]
    fn rasterize_center_and_edges() {
        let one = |z: Complex64| PointSample {
            points: vec![SpherePoint::Finite(z)],
            sources: vec![0],
            source_labels: vec!["f".into()],
            seed: 0,
        };
        let img = rasterize(&one(Complex64::new(0.0, 0.0)), 3, 3, Bounds::square(1.5).unwrap()).unwrap();
        assert_eq!(img.grid, [0, 0, 0, 0, 1, 0, 0, 0, 0]);
        let img = rasterize(&one(Complex64::new(1.5, 1.5)), 3, 3, Bounds::square(1.5).unwrap()).unwrap();
        assert_eq!(img.get(2, 0), 1);
        let img = rasterize(&one(Complex64::new(2.0, 0.0)), 3, 3, Bounds::square(1.5).unwrap()).unwrap();
        assert!(img.grid.iter().all(|&c| c == 0));
        assert_eq!(Bounds::new(1.0, 1.0, 0.0, 1.0), Err(DwError::DegenerateBounds));
        let pgm = img.to_pgm();
        assert!(pgm.starts_with(b"P5\n3 3\n255\n"));
        assert_eq!(pgm.len(), 11 + 9);
    }
}
