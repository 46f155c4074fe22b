//! `mollify`: smooth a field and report the kernel and smoothing diagnostics.

use std::fs::File;
use std::io::BufReader;

use stefan_core::mollifier::{interior_region, l2_convergence, mollify_with, smoothness_report, MASS_TOLERANCE};
use stefan_core::{build_kernel, Diagnostic, Error, Grid, RunReport, TemperatureField};

use crate::config::{ExperimentConfig, FieldSource, MollifyConfig};
use crate::error::{CliError, CliResult};
use crate::rundir::{Manifest, Sink};

pub fn load_field(source: &FieldSource) -> CliResult<TemperatureField> {
    match source {
        FieldSource::Csv { path, origin } => {
            let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            TemperatureField::read_csv(BufReader::new(file), origin.as_deref())
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        }
        FieldSource::Generated { lo, hi, cells, profile } => {
            let grid = Grid::cells(lo, hi, cells).map_err(CliError::input)?;
            let dim = grid.dim();
            let lens = [lo.len(), hi.len(), cells.len()];
            let needs_axes = match profile {
                crate::config::Profile::Linear { gradient: v, .. } | crate::config::Profile::Sine { wavenumber: v } => v.len(),
                crate::config::Profile::Step { axis, .. } => {
                    if *axis >= dim {
                        return Err(CliError::Usage(format!("field.profile.axis: {axis} out of range for {dim}D")));
                    }
                    dim
                }
                crate::config::Profile::Constant { .. } => dim,
            };
            if lens.iter().any(|&l| l != dim) || needs_axes != dim {
                return Err(CliError::Usage("field: lo, hi, cells and profile vectors must share one dimension".into()));
            }
            TemperatureField::from_fn(grid, 0.0, |p| profile.eval(p, dim)).map_err(CliError::input)
        }
    }
}

/// Kernel, smoothed field and diagnostics for one configuration.
pub fn mollify_report(cfg: &MollifyConfig, f: &TemperatureField) -> CliResult<(RunReport, TemperatureField)> {
    let dim = f.grid().dim();
    let kernel = build_kernel(cfg.epsilon, dim, cfg.samples_per_radius).map_err(|e| match e {
        Error::KernelMass { .. } => CliError::compute(e),
        other => CliError::input(other),
    })?;
    let fe = mollify_with(f, &kernel, cfg.extension).map_err(CliError::input)?;
    let mut report = RunReport::new("mollify");
    report.add(
        "kernel_mass",
        Diagnostic::at_most((kernel.discrete_mass() - 1.0).abs(), MASS_TOLERANCE)
            .with_notes(format!("Z = {:.17e}, {} samples per radius", kernel.normalization(), kernel.samples_per_radius())),
    );

    let sup_f = f.sup_norm();
    let sup_fe = fe.sup_norm();
    report.add("sup_bound", Diagnostic::at_most(sup_fe - sup_f, 1e-8));
    if f.min() >= 0.0 {
        let min_fe = fe.valid_values().fold(f64::INFINITY, |m, (_, v)| m.min(v));
        report.add("positivity", Diagnostic::at_most((-min_fe).max(0.0), 1e-12));
    }
    let affine = matches!(&cfg.field, FieldSource::Generated { profile, .. } if profile.is_affine());
    if affine {
        let inner = interior_region(f.grid(), cfg.epsilon);
        let err = fe
            .valid_values()
            .filter(|(i, _)| inner.get(*i))
            .fold(0.0f64, |m, (i, v)| m.max((v - f.values()[i]).abs()));
        report.add("affine_reproduction", Diagnostic::at_most(err, 1e-8).with_notes("max |f_eps - f| on U_eps"));
    }

    let norms = smoothness_report(f, &kernel, cfg.order).map_err(CliError::input)?;
    for n in &norms {
        let ratio = if n.bound > 0.0 { n.measured / n.bound } else { 0.0 };
        report.add(
            format!("derivative_bound_{}", n.order),
            Diagnostic::new(ratio, 1.05, n.within_bound())
                .with_notes(format!("sup |D^{} f_eps| = {:.6e}, bound {:.6e}", n.order, n.measured, n.bound)),
        );
    }
    report.add_series("derivative_norm", norms.iter().map(|n| n.measured).collect());
    report.add_series("derivative_bound", norms.iter().map(|n| n.bound).collect());

    if !cfg.epsilons.is_empty() {
        let errs = l2_convergence(f, &cfg.epsilons).map_err(CliError::input)?;
        let rise = errs.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        report.add("l2_nonincreasing", Diagnostic::at_most(rise, 1e-8).with_notes("largest increase as eps shrinks"));
        report.add_series("l2_epsilon", cfg.epsilons.clone());
        report.add_series("l2_error", errs);
    }
    report.add_series("valid_cells", vec![fe.valid.count() as f64]);
    Ok((report, fe.field))
}

pub fn mollify(config: &ExperimentConfig, mut sink: Sink) -> CliResult<RunReport> {
    let cfg = config.mollify.as_ref().expect("checked by config");
    let f = load_field(&cfg.field)?;
    let (mut report, smoothed) = mollify_report(cfg, &f)?;
    let mut manifest = Manifest::new(config);
    if let Some(dir) = sink.dir() {
        dir.write_series(&mut manifest, "input", f.grid(), std::slice::from_ref(&f))?;
        dir.write_series(&mut manifest, "mollified", smoothed.grid(), std::slice::from_ref(&smoothed))?;
    }
    sink.finish(Some(manifest), &mut report, config)?;
    Ok(report)
}
