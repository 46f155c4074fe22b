//! `compare`: per-file differences between two run directories.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use sha2::{Digest, Sha256};
use stefan_core::report::Provenance;
use stefan_core::{Diagnostic, FrontTrajectory, RunReport};

use crate::config::hex;
use crate::error::{CliError, CliResult};
use crate::rundir::{read_series, Manifest};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-9 }
    }
}

/// Maximum absolute and relative differences of paired samples.
fn diffs(a: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    a.fold((0.0f64, 0.0f64), |(ma, mr), (x, y)| {
        let d = (x - y).abs();
        let r = if d == 0.0 { 0.0 } else { d / x.abs().max(y.abs()) };
        (ma.max(d), mr.max(r))
    })
}

fn diagnostic(abs: f64, rel: f64, tol: Tolerances) -> Diagnostic {
    Diagnostic::new(abs, tol.abs, abs <= tol.abs || rel <= tol.rel).with_notes(format!("max rel {rel:.6e}"))
}

fn read_front(dir: &Path) -> CliResult<Option<FrontTrajectory>> {
    let path = dir.join("front.csv");
    if !path.exists() {
        return Ok(None);
    }
    let file = File::open(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    FrontTrajectory::read_csv(BufReader::new(file))
        .map(Some)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Compares `b` against `a`. Fronts are compared at the sample times of `a`
/// inside the range of `b`; fields file by file when their grids agree.
pub fn compare_runs(a: &Path, b: &Path, tol: Tolerances) -> CliResult<RunReport> {
    let (ma, mb) = (Manifest::read(a)?, Manifest::read(b)?);
    if ma.command != mb.command {
        return Err(CliError::Usage(format!("manifests differ: {} run against {} run", ma.command, mb.command)));
    }
    let mut report = RunReport::new("compare");
    report.provenance = Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: hex(&Sha256::digest(format!("{}{}", ma.config_sha256, mb.config_sha256).as_bytes())),
        seed: None,
    };

    if let (Some(fa), Some(fb)) = (read_front(a)?, read_front(b)?) {
        let pairs: Vec<(f64, f64)> =
            fa.times.iter().zip(&fa.positions).filter_map(|(&t, &s)| fb.position_at(t).map(|sb| (s, sb))).collect();
        if pairs.is_empty() {
            report.add("front.csv", Diagnostic::new(0.0, tol.abs, false).with_notes("front samples do not overlap in time"));
        } else {
            let (da, dr) = diffs(pairs.into_iter());
            report.add("front.csv", diagnostic(da, dr, tol));
        }
    }

    let mut skipped = Vec::new();
    for (name, sa) in &ma.fields {
        let Some(sb) = mb.fields.get(name) else {
            skipped.push(format!("{name}: missing in second run"));
            continue;
        };
        let same_grid = match (ma.grids.get(&sa.grid), mb.grids.get(&sb.grid)) {
            (Some(ga), Some(gb)) => ga.same_shape(gb),
            _ => false,
        };
        if !same_grid || sa.files.len() != sb.files.len() {
            skipped.push(format!("{name}: grids or snapshot counts differ"));
            continue;
        }
        let (va, vb) = (read_series(a, &ma, name)?, read_series(b, &mb, name)?);
        for ((fa, fb), rel) in va.iter().zip(&vb).zip(&sa.files) {
            let (da, dr) = diffs(fa.values().iter().copied().zip(fb.values().iter().copied()));
            report.add(rel.clone(), diagnostic(da, dr, tol));
        }
    }
    for name in mb.fields.keys().filter(|k| !ma.fields.contains_key(*k)) {
        skipped.push(format!("{name}: missing in first run"));
    }
    if !skipped.is_empty() {
        report.add(
            "fields_not_compared",
            Diagnostic::new(skipped.len() as f64, 0.0, true).soft().with_notes(skipped.join("; ")),
        );
    }
    Ok(report)
}
