//! Atomic file output and CSV formatting.

use std::io::Write;
use std::path::Path;

use dwset::julia::PointSample;
use dwset::SpherePoint;

use crate::error::CliError;

/// Writes through a temporary file in the target directory and renames it
/// into place, so an interrupted run leaves no partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |reason: String| CliError::Output { path: path.display().to_string(), reason };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(e.to_string()))?;
    tmp.write_all(bytes).map_err(|e| fail(e.to_string()))?;
    tmp.as_file().sync_all().map_err(|e| fail(e.to_string()))?;
    tmp.persist(path).map_err(|e| fail(e.error.to_string()))?;
    Ok(())
}

fn parts(p: SpherePoint) -> (f64, f64) {
    match p {
        SpherePoint::Finite(z) => (z.re, z.im),
        SpherePoint::Infinity => (f64::INFINITY, f64::INFINITY),
    }
}

/// `n,re,im,step` rows; the step is the chordal distance from the previous point.
pub fn orbit_csv(points: &[SpherePoint]) -> String {
    let mut out = String::from("n,re,im,step\n");
    for (n, &p) in points.iter().enumerate() {
        let step = if n == 0 { 0.0 } else { dwset::chordal_distance(points[n - 1], p) };
        let (re, im) = parts(p);
        out.push_str(&format!("{n},{re},{im},{step}\n"));
    }
    out
}

/// `re,im,word` rows with the source word quoted.
pub fn points_csv(sample: &PointSample) -> String {
    let mut out = String::from("re,im,word\n");
    for (i, &p) in sample.points.iter().enumerate() {
        let (re, im) = parts(p);
        out.push_str(&format!("{re},{im},\"{}\"\n", sample.source_of(i)));
    }
    out
}
