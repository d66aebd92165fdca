//! Finitely generated rational semigroups: generators, words, enumeration
//! and conjugation.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::Tolerances;
use crate::error::{DwError, Result};
use crate::rational::RationalMap;
use crate::sphere::{chordal_distance, SpherePoint};

/// Seed of the fixed sample used to compare maps that are not composed.
const SAMPLE_SEED: u64 = 0x5eed_0f6a;
pub const SAMPLE_POINTS: usize = 64;
/// Sampled maps agreeing to this chordal distance are identified.
pub const SAMPLE_TOL: f64 = 1e-8;
/// Normalized coefficients agreeing to this are identified.
pub const COEFF_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSet {
    gens: Vec<RationalMap>,
    labels: Vec<Option<String>>,
}

impl GeneratorSet {
    pub fn new(gens: Vec<RationalMap>) -> Result<Self> {
        let labels = vec![None; gens.len()];
        Self::with_labels(gens, labels)
    }

    pub fn with_labels(gens: Vec<RationalMap>, labels: Vec<Option<String>>) -> Result<Self> {
        if gens.is_empty() {
            return Err(DwError::EmptyGeneratorSet);
        }
        if labels.len() != gens.len() {
            return Err(DwError::InvalidParameter("one label slot per generator".into()));
        }
        for (index, g) in gens.iter().enumerate() {
            if g.degree() < 2 {
                return Err(DwError::GeneratorDegree { index, degree: g.degree() });
            }
        }
        Ok(GeneratorSet { gens, labels })
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn gens(&self) -> &[RationalMap] {
        &self.gens
    }

    pub fn get(&self, i: usize) -> Option<&RationalMap> {
        self.gens.get(i)
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// Concatenation of two generator lists.
    pub fn union(&self, other: &GeneratorSet) -> GeneratorSet {
        GeneratorSet {
            gens: self.gens.iter().chain(&other.gens).cloned().collect(),
            labels: self.labels.iter().chain(&other.labels).cloned().collect(),
        }
    }

    /// The element named by `word`, composed when its degree allows.
    pub fn element(&self, word: &Word, tol: &Tolerances) -> Result<MapHandle> {
        let mut handle: Option<MapHandle> = None;
        for &i in word.indices().iter().rev() {
            let g = self.gens.get(i).ok_or_else(|| {
                DwError::InvalidParameter(format!("word {word} uses a generator index beyond {}", self.len()))
            })?;
            handle = Some(match handle {
                None => MapHandle::Composed(g.clone()),
                Some(inner) => inner.precompose_outer(g, tol),
            });
        }
        handle.ok_or_else(|| DwError::InvalidParameter("empty word".into()))
    }
}

/// Generator indices, outermost first: `(i1, ..., in)` is `f_i1 ∘ ... ∘ f_in`.
///
/// Indices are zero-based internally and one-based when displayed or serialized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(DwError::InvalidParameter("words are non-empty".into()));
        }
        Ok(Word(indices))
    }

    pub fn single(i: usize) -> Self {
        Word(vec![i])
    }

    /// Parses one-based indices such as `1,2,1`.
    pub fn parse_one_based(s: &str) -> Result<Self> {
        let indices = s
            .split(',')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(DwError::InvalidParameter(format!("bad word index `{t}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn prepend(&self, i: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(i);
        v.extend_from_slice(&self.0);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, ")")
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(|i| i + 1))
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(deserializer)?;
        if raw.is_empty() || raw.contains(&0) {
            return Err(serde::de::Error::custom("words are non-empty lists of one-based indices"));
        }
        Ok(Word(raw.into_iter().map(|i| i - 1).collect()))
    }
}

/// Multiplicities `(m_1, ..., m_n)` of each generator in a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentVector(pub Vec<u32>);

/// Canonical form of a word in an Abelian semigroup. Only a valid equality
/// certificate when the generators were checked to commute.
pub fn abelian_canonical_form(word: &Word, n_gens: usize) -> ExponentVector {
    let mut exps = vec![0u32; n_gens];
    for &i in word.indices() {
        if i < n_gens {
            exps[i] += 1;
        }
    }
    ExponentVector(exps)
}

/// A semigroup element: either a composed rational map or, past the degree
/// cap, the list of factors applied pointwise.
#[derive(Debug, Clone, PartialEq)]
pub enum MapHandle {
    Composed(RationalMap),
    /// Factors outermost first.
    Pointwise(Vec<RationalMap>),
}

impl MapHandle {
    pub fn eval(&self, z: SpherePoint) -> Result<SpherePoint> {
        match self {
            MapHandle::Composed(f) => f.eval(z),
            MapHandle::Pointwise(factors) => {
                factors.iter().rev().try_fold(z, |acc, f| f.eval(acc))
            }
        }
    }

    #[inline]
    pub fn eval_finite(&self, z: Complex64) -> Result<SpherePoint> {
        match self {
            MapHandle::Composed(f) => f.eval_finite(z),
            MapHandle::Pointwise(_) => self.eval(SpherePoint::Finite(z)),
        }
    }

    pub fn composed(&self) -> Option<&RationalMap> {
        match self {
            MapHandle::Composed(f) => Some(f),
            MapHandle::Pointwise(_) => None,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            MapHandle::Composed(f) => f.degree(),
            MapHandle::Pointwise(factors) => factors.iter().map(|f| f.degree()).product(),
        }
    }

    /// Factors outermost first; a composed map is its own single factor.
    pub fn factors(&self) -> Vec<&RationalMap> {
        match self {
            MapHandle::Composed(f) => vec![f],
            MapHandle::Pointwise(factors) => factors.iter().collect(),
        }
    }

    /// `outer ∘ self`, falling back to pointwise evaluation past the degree cap.
    fn precompose_outer(&self, outer: &RationalMap, tol: &Tolerances) -> MapHandle {
        match self {
            MapHandle::Composed(inner) => match outer.compose_with(inner, tol) {
                Ok(f) => MapHandle::Composed(f),
                Err(_) => MapHandle::Pointwise(vec![outer.clone(), inner.clone()]),
            },
            MapHandle::Pointwise(factors) => {
                let mut v = Vec::with_capacity(factors.len() + 1);
                v.push(outer.clone());
                v.extend(factors.iter().cloned());
                MapHandle::Pointwise(v)
            }
        }
    }

    fn sample(&self, points: &[SpherePoint]) -> Vec<SpherePoint> {
        points
            .iter()
            .map(|&z| self.eval(z).unwrap_or(SpherePoint::Infinity))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalKey {
    /// Normalized coefficients of the composed map.
    Normalized(RationalMap),
    Exponents(ExponentVector),
    /// Values at the fixed comparison sample, for pointwise elements.
    Sampled(Vec<SpherePoint>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedElement {
    pub word: Word,
    pub map: MapHandle,
    pub key: CanonicalKey,
}

/// How enumeration identifies equal elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dedup {
    None,
    /// Normalized coefficients, or sampled values for pointwise elements.
    Maps,
    /// Exponent vectors; only sound for commuting generators.
    Abelian,
}

/// The fixed 64-point comparison sample in the disk of radius 2.
pub fn comparison_sample() -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    (0..SAMPLE_POINTS)
        .map(|_| {
            let r = 2.0 * rng.gen::<f64>().sqrt();
            let t = TAU * rng.gen::<f64>();
            SpherePoint::Finite(Complex64::from_polar(r, t))
        })
        .collect()
}

/// All words of length `1..=depth`, shortest first and lexicographic within a
/// length. With deduplication the shortlex-least word of each element is kept;
/// extensions of discarded words are not generated since they are duplicates too.
pub fn enumerate(gens: &GeneratorSet, depth: usize, dedup: Dedup) -> Result<Vec<EnumeratedElement>> {
    enumerate_with(gens, depth, dedup, &Tolerances::default())
}

pub fn enumerate_with(
    gens: &GeneratorSet,
    depth: usize,
    dedup: Dedup,
    tol: &Tolerances,
) -> Result<Vec<EnumeratedElement>> {
    if depth == 0 {
        return Err(DwError::InvalidParameter("enumeration depth must be >= 1".into()));
    }
    let n = gens.len();
    let sample = comparison_sample();
    let mut out: Vec<EnumeratedElement> = Vec::new();
    let mut seen_exponents: HashSet<ExponentVector> = HashSet::new();
    let mut frontier: Vec<(Word, MapHandle)> = Vec::new();

    for length in 1..=depth {
        let candidates: Vec<(Word, MapHandle)> = if length == 1 {
            (0..n)
                .map(|i| (Word::single(i), MapHandle::Composed(gens.gens[i].clone())))
                .collect()
        } else {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (0..frontier.len()).map(move |k| (i, k))).collect();
            pairs
                .par_iter()
                .map(|&(i, k)| {
                    let (w, m) = &frontier[k];
                    (w.prepend(i), m.precompose_outer(&gens.gens[i], tol))
                })
                .collect()
        };

        let mut next_frontier = Vec::with_capacity(candidates.len());
        for (word, map) in candidates {
            let key = match (&map, dedup) {
                (_, Dedup::Abelian) => CanonicalKey::Exponents(abelian_canonical_form(&word, n)),
                (MapHandle::Composed(f), _) => CanonicalKey::Normalized(f.normalized()),
                (MapHandle::Pointwise(_), _) => CanonicalKey::Sampled(map.sample(&sample)),
            };
            let duplicate = match dedup {
                Dedup::None => false,
                Dedup::Abelian => match &key {
                    CanonicalKey::Exponents(e) => !seen_exponents.insert(e.clone()),
                    _ => unreachable!(),
                },
                Dedup::Maps => out.iter().any(|e| same_map(e, &map, &key, &sample)),
            };
            if duplicate {
                continue;
            }
            next_frontier.push((word.clone(), map.clone()));
            out.push(EnumeratedElement { word, map, key });
        }
        frontier = next_frontier;
    }
    Ok(out)
}

fn same_map(existing: &EnumeratedElement, map: &MapHandle, key: &CanonicalKey, sample: &[SpherePoint]) -> bool {
    if existing.map.degree() != map.degree() {
        return false;
    }
    match (&existing.key, key) {
        (CanonicalKey::Normalized(a), CanonicalKey::Normalized(b)) => a.approx_eq(b, COEFF_TOL),
        _ => {
            let a = existing.map.sample(sample);
            let b = map.sample(sample);
            a.iter().zip(&b).all(|(&x, &y)| chordal_distance(x, y) <= SAMPLE_TOL)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbelianEvidence {
    pub abelian: bool,
    pub max_residual: f64,
    /// One-based generator indices of the least commuting pair.
    pub worst_pair: Option<(usize, usize)>,
    pub samples: usize,
    pub tol: f64,
}

/// Pointwise commutation test `f_i(f_j(z)) = f_j(f_i(z))` on random points
/// of the disk of radius 2 that stay away from poles.
pub fn is_abelian(gens: &GeneratorSet, samples: usize, tol: f64) -> AbelianEvidence {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ 0xabe1);
    let mut points = Vec::with_capacity(samples);
    let mut attempts = 0;
    while points.len() < samples.max(1) && attempts < 100 * samples.max(1) {
        attempts += 1;
        let z = Complex64::from_polar(2.0 * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
        let near_pole = gens.gens.iter().any(|g| {
            let scale = g.den().abs_eval(z.norm());
            g.den().eval(z).norm() <= 1e-6 * scale
        });
        if !near_pole {
            points.push(SpherePoint::Finite(z));
        }
    }

    let mut max_residual: f64 = 0.0;
    let mut worst_pair = None;
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            let (f, g) = (&gens.gens[i], &gens.gens[j]);
            for &z in &points {
                let fg = g.eval(z).and_then(|w| f.eval(w));
                let gf = f.eval(z).and_then(|w| g.eval(w));
                let r = match (fg, gf) {
                    (Ok(a), Ok(b)) => chordal_distance(a, b),
                    _ => 2.0,
                };
                if r > max_residual || worst_pair.is_none() {
                    max_residual = max_residual.max(r);
                    worst_pair = Some((i + 1, j + 1));
                }
            }
        }
    }
    AbelianEvidence {
        abelian: max_residual <= tol,
        max_residual,
        worst_pair,
        samples: points.len(),
        tol,
    }
}

/// `e^{iα} (z - a) / (1 - conj(a) z)`, the general conformal automorphism of the disk.
pub fn disk_automorphism(alpha: f64, a: Complex64) -> Result<RationalMap> {
    if a.norm() >= 1.0 {
        return Err(DwError::InvalidParameter("disk automorphism needs |a| < 1".into()));
    }
    let rot = Complex64::from_polar(1.0, alpha);
    RationalMap::mobius(rot, -rot * a, -a.conj(), Complex64::new(1.0, 0.0))
}

/// Maximum of `||phi(z)| - 1|` over unit-circle samples, or an error if `phi`
/// is not a Möbius automorphism of the disk.
pub fn check_disk_automorphism(phi: &RationalMap) -> Result<f64> {
    if !phi.is_mobius() {
        return Err(DwError::NotDiskAutomorphism { residual: f64::INFINITY });
    }
    let mut residual: f64 = 0.0;
    for k in 0..SAMPLE_POINTS {
        let z = Complex64::from_polar(1.0, TAU * k as f64 / SAMPLE_POINTS as f64);
        let r = match phi.eval_finite(z)? {
            SpherePoint::Finite(w) => (w.norm() - 1.0).abs(),
            SpherePoint::Infinity => f64::INFINITY,
        };
        residual = residual.max(r);
    }
    // the boundary test alone also admits maps swapping the disk and its exterior
    let inside = phi.eval_finite(Complex64::new(0.0, 0.0))?.modulus() < 1.0;
    if residual > 1e-9 || !inside {
        return Err(DwError::NotDiskAutomorphism { residual });
    }
    Ok(residual)
}

/// `{phi ∘ g ∘ phi^-1}` for a Möbius disk automorphism `phi`.
pub fn conjugate_semigroup(gens: &GeneratorSet, phi: &RationalMap) -> Result<GeneratorSet> {
    check_disk_automorphism(phi)?;
    let inv = phi.mobius_inverse()?;
    let conj = gens
        .gens
        .iter()
        .map(|g| phi.compose(&g.compose(&inv)?))
        .collect::<Result<Vec<_>>>()?;
    GeneratorSet::with_labels(conj, gens.labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mono(coef: f64, k: usize) -> RationalMap {
        RationalMap::polynomial(Polynomial::monomial(c(coef), k)).unwrap()
    }

    fn words(els: &[EnumeratedElement]) -> Vec<String> {
        els.iter().map(|e| e.word.to_string()).collect()
    }

    #[test]
    fn generators_need_degree_two() {
        let err = GeneratorSet::new(vec![mono(1.0, 2), RationalMap::identity()]).unwrap_err();
        assert_eq!(err, DwError::GeneratorDegree { index: 1, degree: 1 });
        assert_eq!(GeneratorSet::new(vec![]).unwrap_err(), DwError::EmptyGeneratorSet);
    }

    #[test]
    fn enumerate_without_dedup() {
        let gens = GeneratorSet::new(vec![mono(1.0, 2), mono(1.0, 3)]).unwrap();
        let els = enumerate(&gens, 2, Dedup::None).unwrap();
        assert_eq!(words(&els), ["(1)", "(2)", "(1,1)", "(1,2)", "(2,1)", "(2,2)"]);
    }

    #[test]
    fn enumerate_with_dedup_merges_commuting_words() {
        let gens = GeneratorSet::new(vec![mono(1.0, 2), mono(1.0, 3)]).unwrap();
        let els = enumerate(&gens, 2, Dedup::Maps).unwrap();
        assert_eq!(words(&els), ["(1)", "(2)", "(1,1)", "(1,2)", "(2,2)"]);
        let degrees: Vec<usize> = els.iter().map(|e| e.map.degree()).collect();
        assert_eq!(degrees, [2, 3, 4, 6, 9]);
    }

    #[test]
    fn enumerate_scaled_monomials() {
        let gens = GeneratorSet::new(vec![mono(2.0, 2), mono(4.0, 3)]).unwrap();
        let els = enumerate(&gens, 2, Dedup::Maps).unwrap();
        let expected = [(2.0, 2), (4.0, 3), (8.0, 4), (32.0, 6), (256.0, 9)];
        assert_eq!(els.len(), expected.len());
        for (e, (a, l)) in els.iter().zip(expected) {
            assert!(e.map.composed().unwrap().approx_eq(&mono(a, l), 1e-14), "{}", e.word);
        }
    }

    #[test]
    fn abelian_dedup_matches_map_dedup() {
        let gens = GeneratorSet::new(vec![mono(1.0, 2), mono(1.0, 3)]).unwrap();
        let by_map = enumerate(&gens, 3, Dedup::Maps).unwrap();
        let by_exp = enumerate(&gens, 3, Dedup::Abelian).unwrap();
        assert_eq!(words(&by_map), words(&by_exp));
        assert_eq!(by_map.len(), 9);
    }

    #[test]
    fn degree_cap_falls_back_to_pointwise() {
        let gens = GeneratorSet::new(vec![mono(1.0, 3)]).unwrap();
        let tol = Tolerances { max_degree: 10, ..Tolerances::default() };
        let els = enumerate_with(&gens, 3, Dedup::Maps, &tol).unwrap();
        assert_eq!(els.len(), 3);
        assert!(matches!(els[2].map, MapHandle::Pointwise(_)));
        let v = els[2].map.eval(SpherePoint::real(0.5)).unwrap();
        assert!(chordal_distance(v, SpherePoint::real(0.5f64.powi(27))) < 1e-15);
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(abelian_canonical_form(&Word(vec![0, 1, 0]), 2), ExponentVector(vec![2, 1]));
        assert_eq!(abelian_canonical_form(&Word(vec![1]), 2), ExponentVector(vec![0, 1]));
        assert_eq!(
            abelian_canonical_form(&Word(vec![0, 1]), 2),
            abelian_canonical_form(&Word(vec![1, 0]), 2)
        );
    }

    #[test]
    fn commutation_checks() {
        let ev = is_abelian(&GeneratorSet::new(vec![mono(1.0, 2), mono(1.0, 3)]).unwrap(), 50, 1e-9);
        assert!(ev.abelian);
        let ev = is_abelian(&GeneratorSet::new(vec![mono(2.0, 2), mono(4.0, 3)]).unwrap(), 50, 1e-9);
        assert!(ev.abelian && ev.max_residual < 1e-12);

        let f = RationalMap::polynomial(Polynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        let g = RationalMap::polynomial(Polynomial::from_real(&[1.0, -2.0, 1.0])).unwrap();
        // f(g(0)) = 2, g(f(0)) = 0
        assert_eq!(f.eval(g.eval(SpherePoint::ZERO).unwrap()).unwrap(), SpherePoint::real(2.0));
        assert_eq!(g.eval(f.eval(SpherePoint::ZERO).unwrap()).unwrap(), SpherePoint::ZERO);
        let ev = is_abelian(&GeneratorSet::new(vec![f, g]).unwrap(), 50, 1e-9);
        assert!(!ev.abelian);
        assert_eq!(ev.worst_pair, Some((1, 2)));
    }

    #[test]
    fn conjugation_moves_fixed_points() {
        let phi = disk_automorphism(0.0, c(0.3)).unwrap();
        let gens = GeneratorSet::new(vec![mono(1.0, 2)]).unwrap();
        let conj = conjugate_semigroup(&gens, &phi).unwrap();
        let h = &conj.gens()[0];
        assert_eq!(h.degree(), 2);
        let fp = h
            .fixed_points()
            .unwrap()
            .into_iter()
            .find(|p| chordal_distance(p.location, SpherePoint::real(-0.3)) < 1e-9)
            .expect("fixed point at phi(0)");
        assert_eq!(fp.class, crate::rational::MultiplierClass::Superattracting);
    }

    #[test]
    fn conjugation_by_identity_and_odd_symmetry() {
        let gens = GeneratorSet::new(vec![mono(1.0, 3)]).unwrap();
        let id = conjugate_semigroup(&gens, &RationalMap::identity()).unwrap();
        assert!(id.gens()[0].approx_eq(&mono(1.0, 3), 1e-15));
        let neg = disk_automorphism(std::f64::consts::PI, c(0.0)).unwrap();
        let odd = conjugate_semigroup(&gens, &neg).unwrap();
        assert!(odd.gens()[0].approx_eq(&mono(1.0, 3), 1e-15));
    }

    #[test]
    fn non_automorphisms_are_rejected() {
        let gens = GeneratorSet::new(vec![mono(1.0, 2)]).unwrap();
        let inversion = RationalMap::mobius(c(0.0), c(1.0), c(1.0), c(0.0)).unwrap();
        assert!(matches!(
            conjugate_semigroup(&gens, &inversion),
            Err(DwError::NotDiskAutomorphism { .. })
        ));
        let dilation = RationalMap::mobius(c(2.0), c(0.0), c(0.0), c(1.0)).unwrap();
        assert!(matches!(
            conjugate_semigroup(&gens, &dilation),
            Err(DwError::NotDiskAutomorphism { .. })
        ));
    }

    #[test]
    fn word_display_and_parse() {
        let w = Word::parse_one_based("1,2,1").unwrap();
        assert_eq!(w.indices(), &[0, 1, 0]);
        assert_eq!(w.to_string(), "(1,2,1)");
        assert!(Word::parse_one_based("0").is_err());
        assert!(Word::parse_one_based("").is_err());
    }
}
