//! `benchmark`: convergence study of the 1D solver on the similarity
//! problem, plus the conservation-residual refinement study.

use rayon::prelude::*;
use stefan_core::heat::{solve_dirichlet_with, ConservationResidual, OperatorCoefficients};
use stefan_core::stefan1d::{run_stefan, StefanRun};
use stefan_core::{Diagnostic, Grid, RunReport, StefanSpec1D, TemperatureField};

use crate::config::{BenchmarkConfig, ExperimentConfig, Mode};
use crate::error::{CliError, CliResult};
use crate::rundir::{Manifest, RunDir, Sink, REPORT};
use crate::solve::solve1d_run;

pub const DEFAULT_LADDER: [usize; 3] = [50, 100, 200];

/// Horizon of the `sin(pi x)` decay runs behind the conservation study.
pub const CONSERVATION_HORIZON: f64 = 0.1;

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn final_front(run: &StefanRun) -> CliResult<f64> {
    if let Some(e) = &run.failure {
        return Err(CliError::Numerical(format!("benchmark run stopped early: {e}")));
    }
    run.front.last_position().ok_or_else(|| CliError::Numerical("run recorded no front".into()))
}

fn rung_spec(cfg: &BenchmarkConfig, cells: usize) -> StefanSpec1D {
    StefanSpec1D::similarity(cfg.k1, cfg.t_start, cfg.t_end, cells)
}

/// Discrete conservation residual of a `sin(pi x)` decay run on `[0, 1]`
/// with `cells` intervals, zero boundary values and `dt = 0.9` of the limit.
pub fn conservation_rung(cells: usize) -> CliResult<f64> {
    let grid = Grid::vertex_aligned(&[0.0], &[1.0], &[cells + 1]).map_err(CliError::input)?;
    let u0 = TemperatureField::from_fn(grid.clone(), 0.0, |p| (std::f64::consts::PI * p[0]).sin()).map_err(CliError::input)?;
    let coeffs = OperatorCoefficients::laplacian();
    let dt = 0.9 * coeffs.stability_limit(&grid, 0.0).map_err(CliError::compute)?;
    let mut acc = ConservationResidual::new(&grid);
    solve_dirichlet_with(&coeffs, &u0, &|_: &[f64; 3], _| 0.0, CONSERVATION_HORIZON, dt, |u| acc.push(u))
        .map_err(CliError::compute)?;
    acc.value().map_err(CliError::compute)
}

pub fn benchmark(config: &ExperimentConfig, mut sink: Sink) -> CliResult<RunReport> {
    let cfg = config.benchmark.clone().unwrap_or_default();
    let ladder = config.ladder.clone().unwrap_or_else(|| DEFAULT_LADDER.to_vec());
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("ladder: needs at least two increasing resolutions".into()));
    }
    let exact = rung_spec(&cfg, ladder[0])
        .similarity_solution()
        .map_err(CliError::input)?
        .ok_or_else(|| CliError::Usage("benchmark: not a similarity problem".into()))?;
    let target = exact.front(cfg.t_end);

    let root = sink.dir().map(|d| d.root().to_path_buf());
    let rungs: Vec<(f64, f64)> = ladder
        .par_iter()
        .map(|&n| {
            let mut rung = ExperimentConfig::new(Mode::Solve1d);
            rung.seed = config.seed;
            rung.solve1d = Some(rung_spec(&cfg, n));
            let sink = match &root {
                Some(r) => Sink::Dir(RunDir::create(&r.join(format!("rung_{n:04}")))?),
                None => Sink::Discard,
            };
            let (_, run) = solve1d_run(&rung, sink)?;
            Ok((run.dt, (final_front(&run)? - target).abs()))
        })
        .collect::<CliResult<_>>()?;

    let h: Vec<f64> = ladder.iter().map(|&n| 1.0 / n as f64).collect();
    let errors: Vec<f64> = rungs.iter().map(|r| r.1).collect();
    let space = fitted_order(&h, &errors);
    let mut report = RunReport::new("benchmark");
    report.add(
        "space_order",
        Diagnostic::at_least(space, cfg.min_space_order).with_notes("fitted order of the front error at t_end, dt proportional to h^2"),
    );
    report.add("front_error_finest", Diagnostic::at_most(errors[errors.len() - 1] / target, 1e-2).with_notes("relative"));

    let coarse = ladder[0];
    let with_cfl = |cfl: f64| -> CliResult<(f64, f64)> {
        let mut spec = rung_spec(&cfg, coarse);
        spec.cfl = cfl;
        let run = run_stefan(&spec).map_err(CliError::compute)?;
        Ok((run.dt, final_front(&run)?))
    };
    let reference = with_cfl(cfg.reference_cfl)?.1;
    let timed: Vec<(f64, f64)> = cfg.cfls.par_iter().map(|&c| with_cfl(c)).collect::<CliResult<_>>()?;
    let dts: Vec<f64> = timed.iter().map(|t| t.0).collect();
    let time_errors: Vec<f64> = timed.iter().map(|t| (t.1 - reference).abs()).collect();
    let time = fitted_order(&dts, &time_errors);
    report.add(
        "time_order",
        Diagnostic::at_least(time, cfg.min_time_order)
            .with_notes(format!("{coarse} cells, against a run at cfl {}", cfg.reference_cfl)),
    );

    let residuals: Vec<f64> = ladder.par_iter().map(|&n| conservation_rung(n)).collect::<CliResult<_>>()?;
    let shrink = residuals.windows(2).map(|w| w[0].abs() / w[1].abs()).fold(f64::INFINITY, f64::min);
    report.add("conservation_shrink", Diagnostic::at_least(shrink, 3.5).with_notes("smallest |R| ratio between rungs"));
    // dt = 0.9 h^2 / 2 on every rung.
    let scale: Vec<f64> = h.iter().map(|&h| h * h + 0.45 * h * h).collect();
    let c = residuals.iter().zip(&scale).map(|(r, s)| r.abs() / s).fold(0.0f64, f64::max);

    report.add_series("ladder", ladder.iter().map(|&n| n as f64).collect());
    report.add_series("ladder_dt", rungs.iter().map(|r| r.0).collect());
    report.add_series("front_error", errors);
    report.add_series("time_dt", dts);
    report.add_series("time_error", time_errors);
    report.add_series("conservation_residual", residuals);
    report.add_series("conservation_constant", vec![c]);

    let manifest = Manifest::new(config);
    if let Some(dir) = sink.dir() {
        for &n in &ladder {
            dir.record(&format!("rung_{n:04}/{REPORT}"));
        }
    }
    sink.finish(Some(manifest), &mut report, config)?;
    Ok(report)
}
