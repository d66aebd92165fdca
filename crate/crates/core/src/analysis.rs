//! Denjoy-Wolff set estimates for semigroups: clustering, classification,
//! partition by Denjoy-Wolff point and consistency validators.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::julia::PointSample;
use crate::orbit::{dw_point_single, maps_disk_into_disk, DWReport, DiskEvidence, DiskGrid, DwSettings, DwStatus, LocationClass};
use crate::rational::RationalMap;
use crate::semigroup::{conjugate_semigroup, enumerate_with, Dedup, GeneratorSet, Word};
use crate::sphere::SpherePoint;

/// Samples used per generator when testing disk preservation.
pub const PSI_SAMPLES: usize = 256;
/// Hausdorff distance under which a conjugated estimate matches.
pub const CONJUGATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Blocked,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Blocked => "BLOCKED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Absorbing,
    Dispersing,
    Hybrid,
    Empty,
    Undetermined,
}

impl Classification {
    /// Report wording; dispersing is only ever asserted relative to a depth.
    pub fn label(self, depth: usize) -> String {
        match self {
            Classification::Absorbing => "absorbing".into(),
            Classification::Dispersing => format!("dispersing (at depth {depth})"),
            Classification::Hybrid => "hybrid".into(),
            Classification::Empty => "empty".into(),
            Classification::Undetermined => "undetermined".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DWSetEstimate {
    /// Cluster representatives in the closed disk.
    pub points: Vec<SpherePoint>,
    pub location_classes: Vec<LocationClass>,
    /// Witnessing words per cluster, in enumeration order.
    pub cluster_members: Vec<Vec<Word>>,
    pub depth: usize,
    pub inconclusive_words: Vec<Word>,
    pub classification: Classification,
    pub label: String,
    /// Per-element verdicts in enumeration order.
    pub reports: Vec<DWReport>,
}

impl DWSetEstimate {
    /// Builds an estimate from per-element reports by clustering the dw-found points.
    pub fn from_reports(reports: Vec<DWReport>, depth: usize, settings: &DwSettings) -> Self {
        let found: Vec<(Complex64, &Word)> = reports
            .iter()
            .filter(|r| r.status == DwStatus::DwFound)
            .filter_map(|r| Some((r.point?.finite()?, r.word.as_ref()?)))
            .collect();
        let inconclusive_words: Vec<Word> = reports
            .iter()
            .filter(|r| r.status == DwStatus::Inconclusive)
            .filter_map(|r| r.word.clone())
            .collect();

        let labels = single_linkage(&found.iter().map(|f| f.0).collect::<Vec<_>>(), settings.dw.agreement);
        let n_clusters = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut points = Vec::with_capacity(n_clusters);
        let mut location_classes = Vec::with_capacity(n_clusters);
        let mut cluster_members = vec![Vec::new(); n_clusters];
        for c in 0..n_clusters {
            let members: Vec<Complex64> = found.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(f, _)| f.0).collect();
            let mut rep = members.iter().sum::<Complex64>() / members.len() as f64;
            let m = rep.norm();
            if m > 1.0 || (m - 1.0).abs() <= settings.dw.boundary {
                rep /= m;
            }
            points.push(SpherePoint::Finite(rep));
            location_classes.push(LocationClass::of(rep, settings.dw.boundary));
        }
        for ((_, w), &l) in found.iter().zip(&labels) {
            cluster_members[l].push((*w).clone());
        }

        let interior = location_classes.contains(&LocationClass::Interior);
        let boundary = location_classes.contains(&LocationClass::Boundary);
        let pending = !inconclusive_words.is_empty();
        let classification = match (interior, boundary) {
            (true, true) => Classification::Hybrid,
            _ if pending => Classification::Undetermined,
            (true, false) => Classification::Absorbing,
            (false, true) => Classification::Dispersing,
            (false, false) => Classification::Empty,
        };
        DWSetEstimate {
            points,
            location_classes,
            cluster_members,
            depth,
            inconclusive_words,
            classification,
            label: classification.label(depth),
            reports,
        }
    }
}

// Cluster index per point, numbered by first appearance.
fn single_linkage(points: &[Complex64], threshold: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut ids: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            *ids[root].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Estimates DW(G) from the deduplicated elements up to `depth`.
pub fn estimate_dw_set(gens: &GeneratorSet, depth: usize, grid: &DiskGrid, settings: &DwSettings) -> Result<DWSetEstimate> {
    let elements = enumerate_with(gens, depth, Dedup::Maps, &settings.tolerances)?;
    let reports: Vec<DWReport> = elements
        .par_iter()
        .map(|e| {
            let mut r = dw_point_single(&e.map, grid, settings).unwrap_or_else(|err| DWReport {
                word: None,
                status: DwStatus::Inconclusive,
                point: None,
                location_class: None,
                anchor: None,
                samples_agreeing: 0,
                samples: grid.len(),
                reason: Some(err.to_string()),
            });
            r.word = Some(e.word.clone());
            r
        })
        .collect();
    Ok(DWSetEstimate::from_reports(reports, depth, settings))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionClass {
    pub point: SpherePoint,
    pub words: Vec<Word>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    pub classes: Vec<PartitionClass>,
    pub sizes: Vec<usize>,
    /// Set when inconclusive elements were left out of every class.
    pub partial: bool,
    pub unassigned: Vec<Word>,
    pub depth: usize,
}

/// Groups dw-found words by their Denjoy-Wolff cluster.
pub fn dw_partition(estimate: &DWSetEstimate) -> PartitionReport {
    let classes: Vec<PartitionClass> = estimate
        .points
        .iter()
        .zip(&estimate.cluster_members)
        .map(|(&point, words)| PartitionClass { point, words: words.clone() })
        .collect();
    PartitionReport {
        sizes: classes.iter().map(|c| c.words.len()).collect(),
        classes,
        partial: !estimate.inconclusive_words.is_empty(),
        unassigned: estimate.inconclusive_words.clone(),
        depth: estimate.depth,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiReport {
    pub in_psi: bool,
    pub generators: Vec<DiskEvidence>,
    pub estimate: DWSetEstimate,
    pub label: String,
}

/// Ψ membership from generator-level disk preservation, plus the DW estimate.
pub fn classify_psi(gens: &GeneratorSet, depth: usize, grid: &DiskGrid, settings: &DwSettings) -> Result<PsiReport> {
    let generators = gens
        .gens()
        .iter()
        .map(|g| {
            maps_disk_into_disk(
                &crate::semigroup::MapHandle::Composed(g.clone()),
                PSI_SAMPLES,
                PSI_SAMPLES,
                settings.dw.boundary,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = estimate_dw_set(gens, depth, grid, settings)?;
    Ok(PsiReport {
        in_psi: generators.iter().all(|g| g.preserves),
        generators,
        label: estimate.label.clone(),
        estimate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub note: String,
    pub clusters: usize,
    pub interior_clusters: usize,
    pub inconclusive: usize,
    pub depth: usize,
}

fn interior_count(estimate: &DWSetEstimate) -> usize {
    estimate.location_classes.iter().filter(|c| **c == LocationClass::Interior).count()
}

/// For Abelian semigroups with DW(G) in the open disk, DW(G) is infinite or a single point.
pub fn validate_abelian_interior(estimate: &DWSetEstimate, abelian: bool) -> ValidationReport {
    let clusters = estimate.points.len();
    let interior = interior_count(estimate);
    let inconclusive = estimate.inconclusive_words.len();
    let (verdict, note) = if !abelian {
        (Verdict::Blocked, "generators do not commute; the statement does not apply".to_string())
    } else if clusters >= 2 && interior == clusters && inconclusive == 0 {
        (
            Verdict::Fail,
            format!("{clusters} interior clusters, but an Abelian semigroup has one or infinitely many"),
        )
    } else if interior < clusters {
        (Verdict::Pass, "hypothesis not met: some clusters lie on the unit circle".to_string())
    } else if inconclusive > 0 {
        (Verdict::Pass, format!("{inconclusive} inconclusive element(s) leave the count open"))
    } else {
        (Verdict::Pass, format!("{clusters} interior cluster(s) at depth {}", estimate.depth))
    };
    ValidationReport { verdict, note, clusters, interior_clusters: interior, inconclusive, depth: estimate.depth }
}

/// For finitely generated Abelian semigroups, a Julia set meeting the disk forces DW(G) to be empty.
pub fn validate_julia_disk(
    estimate: &DWSetEstimate,
    julia: &PointSample,
    abelian_and_finitely_generated: bool,
    tol_bd: f64,
) -> ValidationReport {
    let clusters = estimate.points.len();
    let inside = julia.points.iter().filter(|p| p.modulus() < 1.0 - tol_bd).count();
    let (verdict, note) = if !abelian_and_finitely_generated {
        (Verdict::Pass, "not Abelian; the statement makes no claim".to_string())
    } else if inside > 0 && clusters > 0 {
        (Verdict::Fail, format!("{inside} Julia sample(s) inside the disk yet {clusters} DW cluster(s)"))
    } else if inside > 0 {
        (Verdict::Pass, format!("{inside} Julia sample(s) inside the disk and DW(G) is empty"))
    } else {
        (Verdict::Pass, "no Julia sample inside the disk; hypothesis not met".to_string())
    };
    ValidationReport {
        verdict,
        note,
        clusters,
        interior_clusters: interior_count(estimate),
        inconclusive: estimate.inconclusive_words.len(),
        depth: estimate.depth,
    }
}

/// Hausdorff distance between finite point sets; 0 for two empty sets and
/// infinite when exactly one is empty.
pub fn hausdorff(a: &[SpherePoint], b: &[SpherePoint]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let dist = |p: &SpherePoint, q: &SpherePoint| match (p.finite(), q.finite()) {
        (Some(x), Some(y)) => (x - y).norm(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let directed = |x: &[SpherePoint], y: &[SpherePoint]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugationReport {
    pub label: String,
    pub conjugated_label: String,
    pub labels_match: bool,
    /// `phi` applied to the clusters of the original semigroup.
    pub pushed_points: Vec<SpherePoint>,
    pub conjugated_points: Vec<SpherePoint>,
    pub hausdorff: f64,
    pub tol: f64,
    pub depth: usize,
    pub verdict: Verdict,
}

/// Compares `phi(DW(G))` with `DW(phi G phi^-1)` at equal depth.
pub fn conjugation_invariance_check(
    gens: &GeneratorSet,
    phi: &RationalMap,
    depth: usize,
    grid: &DiskGrid,
    settings: &DwSettings,
) -> Result<ConjugationReport> {
    let conj = conjugate_semigroup(gens, phi)?;
    let base = estimate_dw_set(gens, depth, grid, settings)?;
    let other = estimate_dw_set(&conj, depth, grid, settings)?;
    let pushed_points = base.points.iter().map(|&p| phi.eval(p)).collect::<Result<Vec<_>>>()?;
    let h = hausdorff(&pushed_points, &other.points);
    let labels_match = base.classification == other.classification;
    Ok(ConjugationReport {
        labels_match,
        verdict: Verdict::from_bool(labels_match && h <= CONJUGATION_TOL),
        label: base.label,
        conjugated_label: other.label,
        pushed_points,
        conjugated_points: other.points,
        hausdorff: h,
        tol: CONJUGATION_TOL,
        depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::julia::julia_semigroup;
    use crate::poly::Polynomial;
    use crate::semigroup::disk_automorphism;

    fn mono(k: usize) -> RationalMap {
        RationalMap::polynomial(Polynomial::monomial(Complex64::new(1.0, 0.0), k)).unwrap()
    }

    fn found(word: usize, p: Complex64) -> DWReport {
        DWReport {
            word: Some(Word::single(word)),
            status: DwStatus::DwFound,
            point: Some(SpherePoint::Finite(p)),
            location_class: None,
            anchor: None,
            samples_agreeing: 1,
            samples: 1,
            reason: None,
        }
    }

    fn synthetic(points: &[Complex64]) -> DWSetEstimate {
        let reports = points.iter().enumerate().map(|(i, &p)| found(i, p)).collect();
        DWSetEstimate::from_reports(reports, 1, &DwSettings::default())
    }

    #[test]
    fn example_absorbing() {
        let gens = GeneratorSet::new(vec![mono(2), mono(3)]).unwrap();
        let est = estimate_dw_set(&gens, 3, &DiskGrid::standard(0), &DwSettings::default()).unwrap();
        assert_eq!(est.points.len(), 1);
        assert!(est.points[0].modulus() < 1e-8);
        assert_eq!(est.classification, Classification::Absorbing);
        let part = dw_partition(&est);
        assert_eq!(part.sizes, [9]);
        assert!(!part.partial);
    }

    #[test]
    fn example_empty() {
        let f = RationalMap::polynomial(Polynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        let gens = GeneratorSet::new(vec![f]).unwrap();
        let est = estimate_dw_set(&gens, 3, &DiskGrid::standard(0), &DwSettings::default()).unwrap();
        assert_eq!(est.classification, Classification::Empty);
        assert!(dw_partition(&est).classes.is_empty());
        let psi = classify_psi(&gens, 1, &DiskGrid::standard(0), &DwSettings::default()).unwrap();
        assert!(!psi.in_psi);
    }

    #[test]
    fn clustering_merges_within_threshold() {
        let est = synthetic(&[Complex64::new(0.0, 0.0), Complex64::new(4e-7, 0.0), Complex64::new(0.5, 0.0)]);
        assert_eq!(est.points.len(), 2);
        assert_eq!(est.cluster_members[0].len(), 2);
        let bd = synthetic(&[Complex64::new(1.0 - 1e-7, 0.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(bd.points[0], SpherePoint::real(1.0));
        assert_eq!(bd.classification, Classification::Dispersing);
        assert_eq!(bd.label, "dispersing (at depth 1)");
        let hy = synthetic(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(hy.classification, Classification::Hybrid);
    }

    #[test]
    fn inconclusive_makes_undetermined() {
        let mut reports = vec![found(0, Complex64::new(0.0, 0.0))];
        let mut r = found(1, Complex64::new(0.0, 0.0));
        r.status = DwStatus::Inconclusive;
        r.point = None;
        reports.push(r);
        let est = DWSetEstimate::from_reports(reports, 2, &DwSettings::default());
        assert_eq!(est.classification, Classification::Undetermined);
        assert!(dw_partition(&est).partial);
    }

    #[test]
    fn abelian_interior_validator() {
        let one = synthetic(&[Complex64::new(0.0, 0.0)]);
        assert_eq!(validate_abelian_interior(&one, true).verdict, Verdict::Pass);
        let two = synthetic(&[Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)]);
        assert_eq!(validate_abelian_interior(&two, true).verdict, Verdict::Fail);
        assert_eq!(validate_abelian_interior(&two, false).verdict, Verdict::Blocked);
        let bd = synthetic(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(validate_abelian_interior(&bd, true).verdict, Verdict::Pass);
    }

    #[test]
    fn julia_disk_validator() {
        let gens = GeneratorSet::new(vec![mono(2), mono(3)]).unwrap();
        let j = julia_semigroup(&gens, 2, 256, 0).unwrap();
        let est = synthetic(&[Complex64::new(0.0, 0.0)]);
        assert_eq!(validate_julia_disk(&est, &j.sample, true, 1e-6).verdict, Verdict::Pass);
        let inside = PointSample {
            points: vec![SpherePoint::real(0.2)],
            sources: vec![0],
            source_labels: vec!["f".into()],
            seed: 0,
        };
        assert_eq!(validate_julia_disk(&est, &inside, true, 1e-6).verdict, Verdict::Fail);
        let empty = synthetic(&[]);
        assert_eq!(validate_julia_disk(&empty, &inside, true, 1e-6).verdict, Verdict::Pass);
    }

    #[test]
    fn hausdorff_edge_cases() {
        assert_eq!(hausdorff(&[], &[]), 0.0);
        assert!(hausdorff(&[SpherePoint::ZERO], &[]).is_infinite());
        let d = hausdorff(&[SpherePoint::ZERO, SpherePoint::real(1.0)], &[SpherePoint::real(0.1)]);
        assert!((d - 0.9).abs() < 1e-15);
    }

    #[test]
    fn conjugation_pushes_cluster() {
        let gens = GeneratorSet::new(vec![mono(2), mono(3)]).unwrap();
        let phi = disk_automorphism(0.0, Complex64::new(0.3, 0.0)).unwrap();
        let rep = conjugation_invariance_check(&gens, &phi, 2, &DiskGrid::standard(0), &DwSettings::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        assert!((rep.conjugated_points[0].finite().unwrap() + 0.3).norm() < 1e-6);
        let id = conjugation_invariance_check(&gens, &RationalMap::identity(), 2, &DiskGrid::standard(0), &DwSettings::default())
            .unwrap();
        assert_eq!(id.hausdorff, 0.0);
    }
}
