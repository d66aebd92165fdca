use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dwset_cli::spec::{load_spec, parse_spec};
use serde_json::Value;

fn dwset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwset"))
        .args(args)
        .env("DWSET_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const Z2_Z3: &str = r#"{"generators": [{"num": [0, 0, 1]}, {"num": [0, 0, 0, 1]}]}"#;

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_spec(dir.path(), "g.json", Z2_Z3);
    let bad = write_spec(dir.path(), "b.json", r#"{"generators": [{"num": [0, 0, 1], "dn": [1]}]}"#);
    let linear = write_spec(dir.path(), "l.json", r#"{"generators": [{"num": [0, 1]}]}"#);

    let ok = dwset(&["dw", s(&good), "--depth", "2"]);
    assert_eq!(ok.status.code(), Some(0));

    for out in [
        dwset(&["dw", s(&bad)]),
        dwset(&["dw", s(&linear)]),
        dwset(&["dw", s(&dir.path().join("missing.json"))]),
        dwset(&["verify", "thm-nonsense"]),
        dwset(&["verify", "thm-blaschke-fixed", "--k", "3"]),
        dwset(&["verify", "thm-blaschke-fixed", "--k", "3", "--a", "1.5"]),
        dwset(&["orbit", s(&good), "--word", "3"]),
    ] {
        assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "no result on a nonzero exit");
        assert!(!out.stderr.is_empty());
    }
    let err = String::from_utf8_lossy(&dwset(&["dw", s(&bad)]).stderr).to_string();
    assert!(err.contains("generators[0]: unknown field `dn`"), "{err}");

    let unwritable = dir.path().join("no/such/dir/out.json");
    let out = dwset(&["dw", s(&good), "--depth", "1", "--out", s(&unwritable)]);
    assert_eq!(out.status.code(), Some(5));
    let out = dwset(&["julia", s(&good), "--depth", "1", "--points", "64", "--out-image", s(&unwritable)]);
    assert_eq!(out.status.code(), Some(5));
    assert!(out.stdout.is_empty());
}

#[test]
fn verify_verdicts_map_to_exit_codes() {
    let pass = dwset(&["verify", "thm-blaschke-parabolic", "--k", "3", "--a", "0.5"]);
    assert_eq!(pass.status.code(), Some(0));
    let r = json_of(&pass);
    assert_eq!(r["results"]["verdict"], "PASS");
    assert!((r["results"]["multiplier"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);

    // a/|a| = i is not a square root of unity, so it is not fixed and the verifier is blocked
    let blocked = dwset(&["verify", "thm-blaschke-parabolic", "--k", "3", "--a", "0,0.5"]);
    assert_eq!(blocked.status.code(), Some(0));
    assert_eq!(json_of(&blocked)["results"]["verdict"], "BLOCKED");

    let inv = dwset(&["verify", "thm-b-invariance", "--r", "0.5", "--depth", "4"]);
    assert_eq!(inv.status.code(), Some(0));
    assert_eq!(json_of(&inv)["results"]["verdict"], "PASS");

    // the pair {z^2 + 1, z^2} does not commute, so the Abelian statement is blocked
    let dir = tempfile::tempdir().unwrap();
    let nc = write_spec(dir.path(), "nc.json", r#"{"generators": [{"num": [1, 0, 1]}, {"num": [0, 0, 1]}]}"#);
    let out = dwset(&["verify", "thm-abelian-interior", "--spec", s(&nc), "--depth", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["results"]["verdict"], "BLOCKED");
}

#[test]
fn conjugation_default_pair() {
    let out = dwset(&["verify", "thm-conjugation", "--c", "0.3", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["results"]["verdict"], "PASS");
    assert!(r["results"]["hausdorff"].as_f64().unwrap() < 1e-6);
    // phi(0) = -0.3
    let p = &r["results"]["conjugated_points"][0];
    assert!((p[0].as_f64().unwrap() + 0.3).abs() < 1e-8 && p[1].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn reports_replay_and_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "g.json",
        r#"{"generators": [{"num": [0, 0, 1]}, {"num": [0, 0, 0, 1]}],
            "settings": {"depth": 2, "seed": 7, "grid": {"random": 8}, "budget": {"max_iter": 5000}}}"#,
    );
    let first = dir.path().join("first.json");
    let again = dir.path().join("again.json");
    let replay = dir.path().join("replay.json");
    assert_eq!(dwset(&["dw", s(&spec), "--out", s(&first)]).status.code(), Some(0));
    assert_eq!(dwset(&["dw", s(&spec), "--out", s(&again)]).status.code(), Some(0));
    assert_eq!(dwset(&["dw", s(&first), "--out", s(&replay)]).status.code(), Some(0));
    let a = std::fs::read(&first).unwrap();
    assert_eq!(a, std::fs::read(&again).unwrap());
    assert_eq!(a, std::fs::read(&replay).unwrap());

    let original = load_spec(&spec).unwrap();
    let replayed = load_spec(&first).unwrap();
    assert_eq!(original.settings, replayed.settings);
    assert_eq!(original.gens.gens(), replayed.gens.gens());

    // stdout and --out carry the same bytes
    let stdout = dwset(&["dw", s(&spec)]).stdout;
    assert_eq!(stdout, a);
}

#[test]
fn flags_override_spec_settings() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "g.json", r#"{"generators": [{"num": [0, 0, 1]}], "settings": {"depth": 1}}"#);
    let r = json_of(&dwset(&["dw", s(&spec), "--depth", "3", "--seed", "11"]));
    assert_eq!(r["settings"]["depth"], 3);
    assert_eq!(r["settings"]["seed"], 11);
    assert_eq!(r["results"]["depth"], 3);
}

#[test]
fn families_expand_to_explicit_coefficients() {
    let family = parse_spec(
        r#"{"generators": [
            {"family": "blaschke_power", "k": 3, "a": 0.5},
            {"family": "monomial", "r": 0.5},
            {"family": "remark_sequence", "k_min": 2, "k_max": 3}
        ]}"#,
    )
    .unwrap();
    // (z^3 + 1/2) / (1 + z^3 / 2), z^2 / (1/2), z^3 / (1/4),
    // (z^2 + 1/3) / (1 + z^2 / 3) at a = 1/3, (z^3 - 1/2) / (1 - z^3 / 2) at a = -1/2
    let explicit = parse_spec(
        r#"{"generators": [
            {"num": [0.5, 0, 0, 1], "den": [1, 0, 0, 0.5]},
            {"num": [0, 0, 2]},
            {"num": [0, 0, 0, 4]},
            {"num": [0.3333333333333333, 0, 1], "den": [1, 0, 0.3333333333333333]},
            {"num": [-0.5, 0, 0, 1], "den": [1, 0, 0, -0.5]}
        ]}"#,
    )
    .unwrap();
    assert_eq!(family.gens.len(), explicit.gens.len());
    for (f, e) in family.gens.gens().iter().zip(explicit.gens.gens()) {
        assert!(f.approx_eq(e, 1e-12), "{f:?} vs {e:?}");
    }
}

fn csv_column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn orbit_csv_examples() {
    let dir = tempfile::tempdir().unwrap();
    let z2 = write_spec(dir.path(), "z2.json", r#"{"generators": [{"num": [0, 0, 1]}]}"#);
    let out = dwset(&["orbit", s(&z2), "--z0", "0.5", "--n", "5"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("n,re,im,step\n"));
    assert_eq!(csv_column(&csv, 1), vec![0.5, 0.25, 0.0625, 0.00390625, 0.0000152587890625, 2.3283064365386963e-10]);

    let b = write_spec(dir.path(), "b.json", r#"{"generators": [{"family": "blaschke_power", "k": 3, "a": 0.5}]}"#);
    let out = dwset(&["orbit", s(&b), "--z0", "0", "--n", "3"]);
    let re = csv_column(&String::from_utf8(out.stdout).unwrap(), 1);
    assert_eq!(re.len(), 4);
    assert!((re[1] - 0.5).abs() < 1e-15 && (re[2] - 10.0 / 17.0).abs() < 1e-15);

    let q = write_spec(dir.path(), "q.json", r#"{"generators": [{"num": [1, 0, 1]}]}"#);
    let path = dir.path().join("orbit.csv");
    let out = dwset(&["orbit", s(&q), "--z0", "0.5", "--n", "4", "--out", s(&path)]);
    assert!(out.stdout.is_empty());
    let re = csv_column(&std::fs::read_to_string(&path).unwrap(), 1);
    let oracle = [0.5, 1.25, 2.5625, 7.56640625, 58.25050354003906];
    for (x, y) in re.iter().zip(oracle) {
        assert!((x - y).abs() <= 1e-12 * y, "{x} vs {y}");
    }

    // a word of two generators composes outermost first: (1,2) = z^2 o (z^2 + 1)
    let two = write_spec(dir.path(), "two.json", r#"{"generators": [{"num": [0, 0, 1]}, {"num": [1, 0, 1]}]}"#);
    let out = dwset(&["orbit", s(&two), "--word", "1,2", "--z0", "0.5", "--n", "1"]);
    let re = csv_column(&String::from_utf8(out.stdout).unwrap(), 1);
    assert_eq!(re[1], 1.5625);
}

#[test]
fn julia_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "m.json", r#"{"generators": [{"num": [0, 0, 2]}, {"num": [0, 0, 0, 4]}]}"#);
    let img = dir.path().join("j.pgm");
    let pts = dir.path().join("j.csv");
    let out = dwset(&[
        "julia", s(&spec), "--depth", "2", "--points", "256", "--size", "64", "--extent", "1",
        "--out-image", s(&img), "--out-points", s(&pts),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["results"]["disk_meets_julia"], true);
    assert!((r["results"]["max_modulus"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((r["results"]["min_modulus"].as_f64().unwrap() - 0.5).abs() < 1e-6);

    let pgm = std::fs::read(&img).unwrap();
    let header = b"P5\n64 64\n255\n";
    assert!(pgm.starts_with(header));
    assert_eq!(pgm.len(), header.len() + 64 * 64);

    let csv = std::fs::read_to_string(&pts).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re,im,word"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), r["results"]["total_points"].as_u64().unwrap() as usize);
    assert!(rows.iter().any(|l| l.ends_with("\"(1,2)\"")));
}
