//! Command implementations. Each command builds its outputs in memory; nothing
//! touches the filesystem until [`Outcome::write`].

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dwset::analysis::{
    classify_psi, conjugation_invariance_check, dw_partition, estimate_dw_set, validate_abelian_interior,
    validate_julia_disk, DWSetEstimate,
};
use dwset::blaschke::{
    monomial_generators, verify_b_invariance, verify_parabolic_criterion, verify_unimodular_fixed_point,
    BlaschkePowerParams, CircleUnionB, MonomialFamilyParams,
};
use dwset::julia::{disk_meets_julia, julia_semigroup, rasterize, Bounds};
use dwset::orbit::orbit_points;
use dwset::semigroup::{check_disk_automorphism, disk_automorphism, is_abelian, GeneratorSet, MapHandle, Word};
use dwset::{Complex64, DwError, Polynomial, RationalMap, SpherePoint, Verdict};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{orbit_csv, points_csv, write_atomic};
use crate::report::Report;
use crate::spec::{load_spec, Settings, Spec};
use crate::{AnalysisArgs, Cli, Command, JuliaArgs, OrbitArgs, VerifyArgs};

pub const THEOREMS: [&str; 6] = [
    "thm-blaschke-fixed",
    "thm-blaschke-parabolic",
    "thm-b-invariance",
    "thm-abelian-interior",
    "thm-julia-disk",
    "thm-conjugation",
];

const ABELIAN_SAMPLES: usize = 64;
const ABELIAN_TOL: f64 = 1e-9;

/// The result of a command: the main document, any side files, and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub body: Vec<u8>,
    /// Destination of `body`; standard output when absent.
    pub out: Option<PathBuf>,
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub report: Option<Report>,
}

impl Outcome {
    fn report(report: Report, out: Option<PathBuf>, verdict: Option<Verdict>) -> Self {
        Outcome {
            exit_code: if verdict == Some(Verdict::Fail) { 4 } else { 0 },
            body: report.to_bytes(),
            out,
            files: Vec::new(),
            report: Some(report),
        }
    }

    /// Writes side files, then the main document. A failed side file aborts
    /// before the main document is emitted.
    pub fn write(&self) -> Result<(), CliError> {
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        match &self.out {
            Some(path) => write_atomic(path, &self.body),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(&self.body)
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::Output { path: "<stdout>".into(), reason: e.to_string() })
            }
        }
    }
}

// Bad user-supplied parameters are parse errors, everything else is numeric.
fn lift(e: DwError) -> CliError {
    match e {
        DwError::InvalidParameter(msg) => CliError::Parse(msg),
        other => CliError::Numeric(other),
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut outcome = match &cli.command {
        Command::Dw(args) => cmd_dw(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Partition(args) => cmd_partition(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Julia(args) => cmd_julia(args),
        Command::Orbit(args) => cmd_orbit(args),
    }?;
    if cli.timings {
        if let Some(report) = outcome.report.as_mut() {
            report.timings = Some(json!({ "total_seconds": start.elapsed().as_secs_f64() }));
            outcome.body = report.to_bytes();
        }
    }
    Ok(outcome)
}

fn load_with_overrides(path: &Path, depth: Option<usize>, seed: Option<u64>) -> Result<Spec, CliError> {
    let mut spec = load_spec(path)?;
    if let Some(d) = depth {
        spec.settings.depth = d;
    }
    if let Some(s) = seed {
        spec.settings.seed = s;
    }
    Ok(spec)
}

fn settings_echo(s: &Settings) -> Value {
    serde_json::to_value(s).expect("settings serialize")
}

fn estimate_warnings(est: &DWSetEstimate) -> Vec<String> {
    let mut w = vec![format!(
        "DW(G) is estimated from words of length <= {}; deeper words may add clusters",
        est.depth
    )];
    if !est.inconclusive_words.is_empty() {
        w.push(format!(
            "{} inconclusive element(s): {}",
            est.inconclusive_words.len(),
            est.inconclusive_words.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        ));
    }
    w
}

fn estimate_json(est: &DWSetEstimate, s: &Settings) -> Value {
    let clusters: Vec<Value> = est
        .points
        .iter()
        .zip(&est.location_classes)
        .zip(&est.cluster_members)
        .map(|((p, c), words)| json!({ "point": p, "location_class": c, "words": words }))
        .collect();
    json!({
        "depth": est.depth,
        "classification": est.classification,
        "label": est.label,
        "points": est.points,
        "clusters": clusters,
        "inconclusive_words": est.inconclusive_words,
        "elements": est.reports,
        "tolerance_context": {
            "agreement": s.dw.agreement,
            "boundary": s.dw.boundary,
            "eps_step": s.budget.eps_step,
            "grid_points": s.grid().len(),
        },
    })
}

fn cmd_dw(args: &AnalysisArgs) -> Result<Outcome, CliError> {
    let spec = load_with_overrides(&args.spec, args.depth, args.seed)?;
    let s = spec.settings;
    let est = estimate_dw_set(&spec.gens, s.depth, &s.grid(), &s.dw_settings()).map_err(lift)?;
    let mut report = Report::new("dw", spec.inputs_echo(), settings_echo(&s), estimate_json(&est, &s));
    report.warnings = estimate_warnings(&est);
    Ok(Outcome::report(report, args.out.clone(), None))
}

fn cmd_classify(args: &AnalysisArgs) -> Result<Outcome, CliError> {
    let spec = load_with_overrides(&args.spec, args.depth, args.seed)?;
    let s = spec.settings;
    let psi = classify_psi(&spec.gens, s.depth, &s.grid(), &s.dw_settings()).map_err(lift)?;
    let generators: Vec<Value> = psi
        .generators
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let mut v = serde_json::to_value(ev).expect("evidence serializes");
            v["generator"] = json!(i + 1);
            v
        })
        .collect();
    let results = json!({
        "in_psi": psi.in_psi,
        "label": psi.label,
        "depth": s.depth,
        "generators": generators,
        "estimate": estimate_json(&psi.estimate, &s),
    });
    let mut report = Report::new("classify", spec.inputs_echo(), settings_echo(&s), results);
    report.warnings = estimate_warnings(&psi.estimate);
    if !psi.in_psi {
        report.warnings.push("some generator does not map the disk into itself; the label is outside Ψ".into());
    }
    Ok(Outcome::report(report, args.out.clone(), None))
}

fn cmd_partition(args: &AnalysisArgs) -> Result<Outcome, CliError> {
    let spec = load_with_overrides(&args.spec, args.depth, args.seed)?;
    let s = spec.settings;
    let est = estimate_dw_set(&spec.gens, s.depth, &s.grid(), &s.dw_settings()).map_err(lift)?;
    let part = dw_partition(&est);
    let results = json!({
        "depth": part.depth,
        "class_count": part.classes.len(),
        "cluster_count": est.points.len(),
        "sizes": part.sizes,
        "classes": part.classes,
        "partial": part.partial,
        "unassigned": part.unassigned,
        "label": est.label,
        "tolerance_context": { "agreement": s.dw.agreement, "boundary": s.dw.boundary },
    });
    let mut report = Report::new("partition", spec.inputs_echo(), settings_echo(&s), results);
    report.warnings = estimate_warnings(&est);
    Ok(Outcome::report(report, args.out.clone(), None))
}

fn require<T: Copy>(v: Option<T>, flag: &str, theorem: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::parse(format!("{theorem} needs --{flag}")))
}

fn default_pair() -> GeneratorSet {
    let mono = |k| RationalMap::polynomial(Polynomial::monomial(Complex64::new(1.0, 0.0), k)).expect("z^k is valid");
    GeneratorSet::with_labels(vec![mono(2), mono(3)], vec![Some("z^2".into()), Some("z^3".into())])
        .expect("{z^2, z^3} is valid")
}

fn verify_spec(args: &VerifyArgs) -> Result<(Spec, Vec<String>), CliError> {
    let (mut spec, warnings) = match &args.spec {
        Some(p) => (load_spec(p)?, Vec::new()),
        None => (
            Spec { gens: default_pair(), settings: Settings::default() },
            vec!["no --spec given; using the generators {z^2, z^3}".to_string()],
        ),
    };
    if let Some(d) = args.depth {
        spec.settings.depth = d;
    }
    if let Some(s) = args.seed {
        spec.settings.seed = s;
    }
    Ok((spec, warnings))
}

fn blaschke_params(args: &VerifyArgs, theorem: &str) -> Result<(BlaschkePowerParams, Value), CliError> {
    let k = require(args.k, "k", theorem)?;
    let a = require(args.a, "a", theorem)?;
    let params = BlaschkePowerParams::new(k, a).map_err(lift)?;
    Ok((params, json!({ "k": k, "a": [a.re, a.im] })))
}

fn cmd_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let theorem = args.theorem.as_str();
    let (inputs, settings, results, verdict, warnings) = match theorem {
        "thm-blaschke-fixed" => {
            let (params, inputs) = blaschke_params(args, theorem)?;
            let r = verify_unimodular_fixed_point(&params).map_err(lift)?;
            (inputs, json!({ "tol": r.tol }), serde_json::to_value(&r).expect("serializes"), r.verdict, Vec::new())
        }
        "thm-blaschke-parabolic" => {
            let (params, inputs) = blaschke_params(args, theorem)?;
            let r = verify_parabolic_criterion(&params).map_err(lift)?;
            (inputs, json!({ "tol": r.tol }), serde_json::to_value(&r).expect("serializes"), r.verdict, Vec::new())
        }
        "thm-b-invariance" => {
            let r_param = require(args.r, "r", theorem)?;
            let depth = args.depth.unwrap_or(4);
            let max_j = args.max_j.unwrap_or(8);
            let samples = args.samples.unwrap_or(64);
            let gens = monomial_generators(&MonomialFamilyParams::new(r_param).map_err(lift)?).map_err(lift)?;
            let b = CircleUnionB::new(r_param, max_j).map_err(lift)?;
            let abelian = is_abelian(&gens, ABELIAN_SAMPLES, ABELIAN_TOL);
            let r = verify_b_invariance(&gens, &b, depth, samples).map_err(lift)?;
            let mut results = serde_json::to_value(&r).expect("serializes");
            results["abelian"] = serde_json::to_value(&abelian).expect("serializes");
            let verdict = r.verdict;
            (
                json!({ "r": r_param, "generators": Spec { gens, settings: Settings::default() }.inputs_echo()["generators"] }),
                json!({ "depth": depth, "max_j": max_j, "samples_per_circle": samples, "tol": r.tol }),
                results,
                verdict,
                Vec::new(),
            )
        }
        "thm-abelian-interior" => {
            let (spec, mut warnings) = verify_spec(args)?;
            let s = spec.settings;
            let abelian = is_abelian(&spec.gens, ABELIAN_SAMPLES, ABELIAN_TOL);
            let est = estimate_dw_set(&spec.gens, s.depth, &s.grid(), &s.dw_settings()).map_err(lift)?;
            let v = validate_abelian_interior(&est, abelian.abelian);
            warnings.extend(estimate_warnings(&est));
            let results = json!({
                "verdict": v.verdict,
                "validation": v,
                "abelian": abelian,
                "estimate": estimate_json(&est, &s),
            });
            (spec.inputs_echo(), settings_echo(&s), results, v.verdict, warnings)
        }
        "thm-julia-disk" => {
            let (spec, mut warnings) = verify_spec(args)?;
            let s = spec.settings;
            let abelian = is_abelian(&spec.gens, ABELIAN_SAMPLES, ABELIAN_TOL);
            let est = estimate_dw_set(&spec.gens, s.depth, &s.grid(), &s.dw_settings()).map_err(lift)?;
            let julia = julia_semigroup(&spec.gens, s.depth, s.points, s.seed).map_err(lift)?;
            let meets = disk_meets_julia(&julia.sample, s.dw.boundary).map_err(lift)?;
            let v = validate_julia_disk(&est, &julia.sample, abelian.abelian, s.dw.boundary);
            warnings.extend(estimate_warnings(&est));
            warnings.extend(skipped_warnings(&julia.skipped));
            let results = json!({
                "verdict": v.verdict,
                "validation": v,
                "abelian": abelian,
                "disk_meets_julia": meets,
                "julia_points": julia.sample.len(),
                "estimate": estimate_json(&est, &s),
            });
            (spec.inputs_echo(), settings_echo(&s), results, v.verdict, warnings)
        }
        "thm-conjugation" => {
            let (spec, mut warnings) = verify_spec(args)?;
            let s = spec.settings;
            let c = args.c.unwrap_or(Complex64::new(0.0, 0.0));
            let alpha = args.alpha.unwrap_or(0.0);
            let phi = disk_automorphism(alpha, c).map_err(lift)?;
            let phi_residual = check_disk_automorphism(&phi).map_err(lift)?;
            let r = conjugation_invariance_check(&spec.gens, &phi, s.depth, &s.grid(), &s.dw_settings())
                .map_err(lift)?;
            warnings.push(format!("both estimates are truncated at depth {}", s.depth));
            let mut results = serde_json::to_value(&r).expect("serializes");
            results["phi"] = json!({ "c": [c.re, c.im], "alpha": alpha, "num": phi.num(), "den": phi.den(),
                "boundary_residual": phi_residual });
            let mut inputs = spec.inputs_echo();
            inputs["phi"] = json!({ "c": [c.re, c.im], "alpha": alpha });
            (inputs, settings_echo(&s), results, r.verdict, warnings)
        }
        other => {
            return Err(CliError::parse(format!(
                "unknown theorem `{other}`, expected one of {}",
                THEOREMS.join(", ")
            )))
        }
    };
    let mut inputs = inputs;
    inputs["theorem"] = json!(theorem);
    let mut results = results;
    results["verdict"] = json!(verdict);
    let mut report = Report::new("verify", inputs, settings, results);
    report.warnings = warnings;
    Ok(Outcome::report(report, args.out.clone(), Some(verdict)))
}

fn skipped_warnings(skipped: &[dwset::julia::SkippedElement]) -> Vec<String> {
    skipped.iter().map(|s| format!("element {} skipped: {}", s.word, s.reason)).collect()
}

fn cmd_julia(args: &JuliaArgs) -> Result<Outcome, CliError> {
    let mut spec = load_with_overrides(&args.spec, args.depth, args.seed)?;
    if let Some(p) = args.points {
        spec.settings.points = p;
    }
    let s = spec.settings;
    if s.points == 0 {
        return Err(CliError::parse("--points must be >= 1"));
    }
    let julia = julia_semigroup(&spec.gens, s.depth, s.points, s.seed).map_err(lift)?;
    if julia.sample.is_empty() {
        return Err(CliError::Numeric(DwError::InvalidParameter(
            "every element exceeded the composition cap; no Julia samples".into(),
        )));
    }
    let meets = disk_meets_julia(&julia.sample, s.dw.boundary).map_err(lift)?;
    let moduli: Vec<f64> = julia.sample.points.iter().map(|p| p.modulus()).collect();
    let min_mod = moduli.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mod = moduli.iter().copied().fold(0.0, f64::max);

    let mut files = Vec::new();
    let mut image = Value::Null;
    if let Some(path) = &args.out_image {
        if !(args.extent > 0.0 && args.extent.is_finite()) {
            return Err(CliError::parse("--extent must be positive"));
        }
        let bounds = Bounds::square(args.extent).map_err(lift)?;
        let raster = rasterize(&julia.sample, args.size, args.size, bounds).map_err(lift)?;
        image = json!({ "width": raster.width, "height": raster.height, "bounds": raster.bounds,
            "nonzero_pixels": raster.grid.iter().filter(|&&c| c > 0).count() });
        files.push((path.clone(), raster.to_pgm()));
    }
    if let Some(path) = &args.out_points {
        files.push((path.clone(), points_csv(&julia.sample).into_bytes()));
    }

    let results = json!({
        "depth": julia.depth,
        "elements": julia.elements,
        "points_per_element": s.points,
        "total_points": julia.sample.len(),
        "sources": julia.sample.source_labels,
        "skipped": julia.skipped,
        "min_modulus": min_mod,
        "max_modulus": max_mod,
        "disk_meets_julia": meets.meets,
        "disk_check": meets,
        "image": image,
    });
    let mut report = Report::new("julia", spec.inputs_echo(), settings_echo(&s), results);
    report.warnings = vec![format!(
        "J(G) is sampled as the union over elements of length <= {}; no closure is taken",
        julia.depth
    )];
    report.warnings.extend(skipped_warnings(&julia.skipped));
    let mut outcome = Outcome::report(report, args.out.clone(), None);
    outcome.files = files;
    Ok(outcome)
}

fn cmd_orbit(args: &OrbitArgs) -> Result<Outcome, CliError> {
    let spec = load_spec(&args.spec)?;
    let word = Word::parse_one_based(&args.word).map_err(lift)?;
    if let Some(&bad) = word.indices().iter().find(|&&i| i >= spec.gens.len()) {
        return Err(CliError::parse(format!(
            "--word: index {} exceeds the {} generator(s)",
            bad + 1,
            spec.gens.len()
        )));
    }
    let factors: Vec<RationalMap> = word.indices().iter().map(|&i| spec.gens.gens()[i].clone()).collect();
    let handle = MapHandle::Pointwise(factors);
    let points = orbit_points(&handle, SpherePoint::Finite(args.z0), args.n).map_err(lift)?;
    Ok(Outcome {
        exit_code: 0,
        body: orbit_csv(&points).into_bytes(),
        out: args.out.clone(),
        files: Vec::new(),
        report: None,
    })
}
