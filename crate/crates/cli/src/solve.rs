//! `solve1d` and `solve3d`.

use stefan_core::stefan1d::{run_stefan, StefanRun};
use stefan_core::stefan3d::run_stefan3d;
use stefan_core::{Grid, RunReport};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::rundir::{Manifest, Sink};

/// Physical grid the 1D liquid (and solid) temperatures are resampled on:
/// twice the mapped resolution over `[0, L]`, with `L` the solid length in
/// two-phase runs and otherwise 1.25 times the furthest front.
pub fn physical_grid_1d(cells: usize, extent: f64) -> CliResult<Grid> {
    Grid::cells(&[0.0], &[extent], &[2 * cells]).map_err(CliError::compute)
}

pub fn solve1d(config: &ExperimentConfig, sink: Sink) -> CliResult<RunReport> {
    solve1d_run(config, sink).map(|(report, _)| report)
}

/// `solve1d`, also handing back the run itself.
pub fn solve1d_run(config: &ExperimentConfig, mut sink: Sink) -> CliResult<(RunReport, StefanRun)> {
    let spec = config.solve1d.as_ref().expect("checked by config");
    spec.validate().map_err(CliError::input)?;
    let run = run_stefan(spec).map_err(CliError::compute)?;
    let mut report = run.report.clone();
    let mut manifest = Manifest::new(config);
    manifest.dt = Some(run.dt);
    manifest.steps = Some(run.steps);
    manifest.stability_limit = Some(spec.stability_limit().map_err(CliError::input)?);
    if let Some(dir) = sink.dir() {
        let mapped = run.liquid.grid().clone();
        dir.write_series(&mut manifest, "liquid", &mapped, run.liquid.snapshots())?;
        if let Some(solid) = &run.solid {
            dir.write_series(&mut manifest, "solid", solid.grid(), solid.snapshots())?;
        }
        let extent = match &spec.second_phase {
            Some(p) => p.length,
            None => 1.25 * run.snapshot_fronts.iter().fold(0.0f64, |a, &b| a.max(b)),
        };
        let grid = physical_grid_1d(spec.cells, extent)?;
        let physical = run.physical_trajectory(&grid).map_err(CliError::compute)?;
        dir.write_series(&mut manifest, "physical", &grid, physical.snapshots())?;
        let mut buf = Vec::new();
        run.front.write_csv(&mut buf).map_err(CliError::compute)?;
        dir.write("front.csv", &buf)?;
    }
    sink.finish(Some(manifest), &mut report, config)?;
    Ok((report, run))
}

pub fn solve3d(config: &ExperimentConfig, mut sink: Sink) -> CliResult<RunReport> {
    let spec = config.solve3d.as_ref().expect("checked by config");
    spec.validate().map_err(CliError::input)?;
    let run = run_stefan3d(spec).map_err(CliError::compute)?;
    let mut report = run.report.clone();
    let mut manifest = Manifest::new(config);
    manifest.dt = Some(run.dt);
    manifest.steps = Some(run.steps);
    manifest.stability_limit = Some(spec.stability_limit());
    if let Some(dir) = sink.dir() {
        dir.write_series(&mut manifest, "temperature", run.temperatures.grid(), run.temperatures.snapshots())?;
        let heights: Vec<_> = run.fronts.iter().map(|f| f.as_field().clone()).collect();
        let plane = run.fronts[0].grid().clone();
        dir.write_series(&mut manifest, "front", &plane, &heights)?;
        let mut buf = Vec::new();
        run.front.write_csv(&mut buf).map_err(CliError::compute)?;
        dir.write("front.csv", &buf)?;
    }
    sink.finish(Some(manifest), &mut report, config)?;
    Ok(report)
}
