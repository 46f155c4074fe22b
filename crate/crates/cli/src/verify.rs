//! `verify`: the built-in diagnostic suite, or checks over a finished run.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stefan_core::heat::{solve_dirichlet, HeatTrajectory, OperatorCoefficients, SampledFn, SpaceTimeData};
use stefan_core::verify::{
    barrier_field, continuity_violation, delta_of_t, heat_residual_field, initial_continuity_metric, is_nondecreasing,
    max_principle_audit, radial_ordering, residual_extent, subcaloric_ordering, BarrierParams, SubcaloricOrdering,
};
use stefan_core::{CellMask, Diagnostic, FrontTrajectory, Grid, ParabolicCylinder, Point, RunReport, TemperatureField};

use crate::config::VerifyConfig;
use crate::error::{CliError, CliResult};
use crate::rundir::{read_series, Manifest};

pub const SUITE_CHECKS: [&str; 4] = ["barrier", "max_principle", "subcaloric", "radial"];
pub const RUN_CHECKS_1D: [&str; 4] = ["front_monotone", "max_principle", "delta", "continuity"];
pub const RUN_CHECKS_3D: [&str; 3] = ["front_monotone", "lipschitz", "nonnegative"];

/// Resolves `--checks` (`all` or a comma list) against the available names.
pub fn select_checks(spec: &str, available: &[&str]) -> CliResult<Vec<String>> {
    if spec.trim() == "all" {
        return Ok(available.iter().map(|s| s.to_string()).collect());
    }
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !available.contains(&name) {
            return Err(CliError::Usage(format!("--checks: unknown check {name:?}; available: {}", available.join(", "))));
        }
        if !out.iter().any(|c| c == name) {
            out.push(name.to_string());
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("--checks: no checks selected".into()));
    }
    Ok(out)
}

/// The constant the barrier residual is stated to take: `-(2n - 1)/(8n)`.
pub fn stated_barrier_constant(dim: usize) -> f64 {
    -(2.0 * dim as f64 - 1.0) / (8.0 * dim as f64)
}

/// Exact discrete caloric samples `|x|^2 + 2n t + x_1 ... x_n` (the product
/// is harmonic for `n >= 2`; for `n = 1` it is the linear term) on the unit
/// cube with spacing `h`, over three levels `dt = h^2 / 4` apart.
pub fn barrier_trajectory(dim: usize, h: f64) -> CliResult<HeatTrajectory> {
    let nodes = (1.0 / h).round() as usize + 1;
    let grid = Grid::vertex_aligned(&vec![0.0; dim], &vec![1.0; dim], &vec![nodes; dim]).map_err(CliError::input)?;
    let dt = h * h / 4.0;
    let u = |p: &Point, t: f64| {
        let r2: f64 = (0..dim).map(|k| p[k] * p[k]).sum();
        r2 + 2.0 * dim as f64 * t + (0..dim).map(|k| p[k]).product::<f64>()
    };
    let snaps = (0..3)
        .map(|k| {
            let t = 0.5 + k as f64 * dt;
            TemperatureField::from_fn(grid.clone(), t, |p| u(p, t))
        })
        .collect::<stefan_core::Result<Vec<_>>>()
        .map_err(CliError::compute)?;
    HeatTrajectory::new(dt, snaps).map_err(CliError::compute)
}

/// `(min, max)` of `Lap v - v_t` for the barrier centred in the cube at
/// the middle level.
pub fn barrier_residual(dim: usize, h: f64) -> CliResult<(f64, f64)> {
    let u = barrier_trajectory(dim, h)?;
    let p = BarrierParams::new([0.5; 3], u.snapshots()[1].time(), dim).map_err(CliError::input)?;
    let v = barrier_field(&u, &p).map_err(CliError::compute)?;
    Ok(residual_extent(&heat_residual_field(&v).map_err(CliError::compute)?))
}

fn barrier_checks(cfg: &VerifyConfig, report: &mut RunReport) -> CliResult<()> {
    let mut extent = Vec::new();
    for &dim in &cfg.barrier_dims {
        let (lo, hi) = barrier_residual(dim, cfg.barrier_spacing)?;
        let c = 1.0 / (8.0 * dim as f64);
        let computed = -(2.0 * dim as f64 + 1.0) * c;
        let stated = stated_barrier_constant(dim);
        let dev = |target: f64| (lo - target).abs().max((hi - target).abs());
        report.add(
            format!("barrier_residual_n{dim}"),
            Diagnostic::at_most(dev(computed), 1e-8).with_notes(format!("residual in [{lo:.12e}, {hi:.12e}], -(2n+1)/(8n) = {computed:.12e}")),
        );
        report.add(
            format!("barrier_stated_constant_n{dim}"),
            Diagnostic::at_most(dev(stated), 1e-3).soft().with_notes(format!(
                "stated value -(2n-1)/(8n) = {stated:.6e} not reproduced: the time derivative of -c(t_m - t) enters as -c, not +c"
            )),
        );
        report.add(
            format!("barrier_positive_n{dim}"),
            Diagnostic::new(hi, 0.0, hi > 0.0).soft().with_notes("claimed Lap v - v_t > 0; measured negative everywhere"),
        );
        extent.extend([lo, hi]);
    }
    report.add_series("barrier_residual_extent", extent);
    Ok(())
}

/// One randomised Dirichlet problem: random nonnegative initial values
/// and nonnegative, time-varying boundary values.
pub fn random_dirichlet_run(rng: &mut ChaCha8Rng) -> CliResult<HeatTrajectory> {
    let dim = rng.random_range(1..=3usize);
    let n = match dim {
        1 => rng.random_range(12..=60usize),
        2 => rng.random_range(8..=24),
        _ => rng.random_range(6..=10),
    };
    let grid = Grid::cells(&vec![0.0; dim], &vec![1.0; dim], &vec![n; dim]).map_err(CliError::input)?;
    let values: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
    let amp: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
    let phase: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.0..6.3)).collect();
    let omega = rng.random_range(0.0..40.0);
    let cfl = rng.random_range(0.5..=1.0);
    let steps = rng.random_range(20..=120usize);
    let u0 = TemperatureField::new(grid.clone(), 0.0, values).map_err(CliError::compute)?;
    let coeffs = OperatorCoefficients::laplacian();
    let dt = cfl * coeffs.stability_limit(&grid, 0.0).map_err(CliError::compute)?;
    let h = grid.spacing(0);
    let boundary = move |p: &Point, t: f64| {
        let mut ijk = [0usize; 3];
        for k in 0..dim {
            ijk[k] = ((p[k] / h) - 0.5).round() as usize;
        }
        let i = grid.index(ijk);
        amp[i] * (1.0 + 0.5 * (omega * t + phase[i]).sin())
    };
    solve_dirichlet(&coeffs, &u0, &boundary, steps as f64 * dt, dt).map_err(CliError::compute)
}

fn max_principle_checks(cfg: &VerifyConfig, seed: u64, report: &mut RunReport) -> CliResult<()> {
    let violations: Vec<f64> = (0..cfg.audit_runs)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
            let traj = random_dirichlet_run(&mut rng)?;
            let audit = max_principle_audit(&traj, &CellMask::full(traj.grid())).map_err(CliError::compute)?;
            Ok(audit.violation / audit.scale)
        })
        .collect::<CliResult<_>>()?;
    let worst = violations.iter().fold(0.0f64, |a, &b| a.max(b));
    let count = violations.iter().filter(|&&v| v > 1e-12).count();
    report.add(
        "max_principle",
        Diagnostic::at_most(worst, 1e-12).with_notes(format!("{count} of {} randomised runs in violation", violations.len())),
    );
    report.add_series("max_principle_violation", violations);
    Ok(())
}

/// A randomised subcaloric function: `sum a_k x_k^2 - beta t` plus an exact
/// discrete caloric mode `amp lambda^(t/dt) cos(k . x)`, on `[-1, 1]^dim`.
#[derive(Clone, Debug)]
pub struct SubcaloricCase {
    pub dim: usize,
    pub cells: usize,
    pub a: [f64; 3],
    pub beta: f64,
    pub amp: f64,
    pub k: [f64; 3],
}

impl SubcaloricCase {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let dim = rng.random_range(1..=3usize);
        let cells = match dim {
            1 => 40,
            2 => 20,
            _ => 12,
        };
        loop {
            let a = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let beta = rng.random::<f64>();
            if 2.0 * a[..dim].iter().sum::<f64>() + beta > 0.05 {
                let amp = rng.random_range(-1.0..1.0);
                let k = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
                return Self { dim, cells, a, beta, amp, k };
            }
        }
    }

    /// Exact discrete heat defect `Lap_h w - D_t w = 2 sum a_k + beta`.
    pub fn defect(&self) -> f64 {
        2.0 * self.a[..self.dim].iter().sum::<f64>() + self.beta
    }

    pub fn sampled(&self) -> CliResult<SampledFn<impl Fn(&Point, f64) -> f64 + Sync>> {
        let dim = self.dim;
        let grid =
            Grid::vertex_aligned(&vec![-1.0; dim], &vec![1.0; dim], &vec![self.cells + 1; dim]).map_err(CliError::input)?;
        let h = grid.spacing(0);
        let dt = 0.8 * h * h / (2.0 * dim as f64);
        let lambda = 1.0 - dt * (0..dim).map(|j| 4.0 / (h * h) * (self.k[j] * h / 2.0).sin().powi(2)).sum::<f64>();
        let (a, beta, amp, k) = (self.a, self.beta, self.amp, self.k);
        let f = move |p: &Point, t: f64| {
            let q: f64 = (0..dim).map(|j| a[j] * p[j] * p[j]).sum::<f64>() - beta * t;
            let phase: f64 = (0..dim).map(|j| k[j] * p[j]).sum();
            q + amp * lambda.powf(t / dt) * phase.cos()
        };
        let levels = (0.36 / dt).ceil() as usize + 2;
        SampledFn::new(grid, 0.0, dt, levels, f).map_err(CliError::compute)
    }

    /// Cylinder of radius 0.6 centred at the origin, topped at the last level.
    pub fn cylinder(&self, w: &impl SpaceTimeData) -> CliResult<ParabolicCylinder> {
        ParabolicCylinder::new([0.0; 3], w.time(w.levels() - 1), 0.6).map_err(CliError::input)
    }

    pub fn ordering(&self) -> CliResult<SubcaloricOrdering> {
        let w = self.sampled()?;
        subcaloric_ordering(&w, &self.cylinder(&w)?).map_err(CliError::compute)
    }
}

pub fn subcaloric_cases(seed: u64, n: usize) -> Vec<SubcaloricCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ab_ca10);
    (0..n).map(|_| SubcaloricCase::random(&mut rng)).collect()
}

fn subcaloric_checks(cfg: &VerifyConfig, seed: u64, report: &mut RunReport) -> CliResult<()> {
    let cases = subcaloric_cases(seed, cfg.subcaloric_samples);
    let orderings: Vec<SubcaloricOrdering> = cases.par_iter().map(|c| c.ordering()).collect::<CliResult<_>>()?;
    let first = orderings.first().map(|o| o.sign()).unwrap_or(0);
    let mixed = orderings.iter().filter(|o| o.sign() == 0 || o.sign() != first).count();
    report.add(
        "subcaloric_sign_uniform",
        Diagnostic::at_most(mixed as f64, 0.0).with_notes(format!(
            "{} samples, measured sign of z - w: {}",
            orderings.len(),
            match first {
                1 => "z > w (replacement above)",
                -1 => "z < w (replacement below)",
                _ => "mixed",
            }
        )),
    );
    let min_defect = orderings.iter().fold(f64::INFINITY, |m, o| m.min(o.min_defect));
    report.add("subcaloric_defect", Diagnostic::at_least(min_defect, 0.0).with_notes("min discrete Lap w - w_t"));
    let below = orderings.iter().filter(|o| o.replacement_below()).count();
    report.add(
        "subcaloric_stated_ordering",
        Diagnostic::new(below as f64, orderings.len() as f64, below == orderings.len())
            .soft()
            .with_notes("samples with z <= w as stated; the discrete comparison gives z >= w"),
    );
    report.add_series("subcaloric_min_gap", orderings.iter().map(|o| o.min_gap).collect());
    report.add_series("subcaloric_max_gap", orderings.iter().map(|o| o.max_gap).collect());
    Ok(())
}

/// `(R, w_R)` for `w = |x|^2` in 1D at the origin.
pub fn radial_measurement(radii: &[f64]) -> CliResult<Vec<(f64, f64)>> {
    let grid = Grid::vertex_aligned(&[-1.0], &[1.0], &[201]).map_err(CliError::input)?;
    let dt = 0.4 * grid.spacing(0).powi(2);
    let top = radii.iter().fold(0.0f64, |a, &r| a.max(r));
    let levels = ((2.0 * top).powi(2) / dt).ceil() as usize + 2;
    let w = SampledFn::new(grid, 0.0, dt, levels, |p: &Point, _| p[0] * p[0]).map_err(CliError::compute)?;
    let t0 = w.start_time() + (levels - 1) as f64 * dt;
    radial_ordering(&w, &[0.0; 3], t0, radii, 9).map_err(CliError::compute)
}

fn radial_checks(cfg: &VerifyConfig, report: &mut RunReport) -> CliResult<()> {
    let series = radial_measurement(&cfg.radii)?;
    let up = is_nondecreasing(&series);
    report.add(
        "radial_monotone",
        Diagnostic::new(if up { 1.0 } else { 0.0 }, 1.0, up)
            .soft()
            .with_notes(if up { "w_R non-decreasing in R, as stated" } else { "w_R decreases somewhere in R, contrary to the stated ordering" }),
    );
    report.add_series("radial_radius", series.iter().map(|p| p.0).collect());
    report.add_series("radial_average", series.iter().map(|p| p.1).collect());
    Ok(())
}

pub fn suite(cfg: &VerifyConfig, seed: u64, checks: &[String]) -> CliResult<RunReport> {
    let mut report = RunReport::new("verify");
    for c in checks {
        match c.as_str() {
            "barrier" => barrier_checks(cfg, &mut report)?,
            "max_principle" => max_principle_checks(cfg, seed, &mut report)?,
            "subcaloric" => subcaloric_checks(cfg, seed, &mut report)?,
            "radial" => radial_checks(cfg, &mut report)?,
            other => return Err(CliError::Usage(format!("--checks: {other:?} is not a suite check"))),
        }
    }
    Ok(report)
}

fn trajectory(snaps: Vec<TemperatureField>) -> CliResult<HeatTrajectory> {
    let dt = if snaps.len() > 1 { snaps[1].time() - snaps[0].time() } else { 1.0 };
    HeatTrajectory::new(dt, snaps).map_err(CliError::compute)
}

fn read_front(dir: &Path) -> CliResult<FrontTrajectory> {
    let path = dir.join("front.csv");
    let file = File::open(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    FrontTrajectory::read_csv(BufReader::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Checks over the outputs of a `solve1d` or `solve3d` run directory.
pub fn run_checks(dir: &Path, checks: &str) -> CliResult<RunReport> {
    let manifest = Manifest::read(dir)?;
    let mut report = RunReport::new("verify");
    match manifest.command.as_str() {
        "solve1d" => {
            let selected = select_checks(checks, &RUN_CHECKS_1D)?;
            let front = read_front(dir)?;
            let traj = trajectory(read_series(dir, &manifest, "physical")?)?;
            let grid = traj.grid().clone();
            let h = grid.spacing(0);
            let b = front.positions.first().copied().unwrap_or(0.0);
            for c in &selected {
                match c.as_str() {
                    "front_monotone" => {
                        report.add("front_monotone", Diagnostic::at_least(front.min_increment().min(0.0), -1e-12));
                    }
                    "max_principle" => {
                        let a = max_principle_audit(&traj, &CellMask::full(&grid)).map_err(CliError::compute)?;
                        report.add("max_principle", Diagnostic::at_most(a.violation, 1e-12 * a.scale));
                    }
                    "delta" => {
                        let g0 = CellMask::from_fn(&grid, |p| p[0] < b);
                        if g0.is_none() {
                            return Err(CliError::Usage("delta: initial liquid region is empty".into()));
                        }
                        let d = delta_of_t(&traj, &g0, &traj.times()).map_err(CliError::compute)?;
                        let diameter = grid.axis(0).extent;
                        let out_of_range = d.iter().filter(|(_, v)| !(0.0..=diameter).contains(v)).count();
                        report.add("delta_bounded", Diagnostic::at_most(out_of_range as f64, 0.0));
                        report.add("delta_initial", Diagnostic::at_most(d[0].1, h).with_notes("delta at the first snapshot"));
                        let drop = d.windows(2).map(|w| w[0].1 - w[1].1).fold(0.0f64, f64::max);
                        report.add("delta_monotone", Diagnostic::at_most(drop, 0.0).soft());
                        report.add_series("delta", d.iter().map(|p| p.1).collect());
                    }
                    "continuity" => {
                        if traj.len() < 3 {
                            return Err(CliError::Usage("continuity: run has fewer than three snapshots".into()));
                        }
                        let outside = CellMask::from_fn(&grid, |p| p[0] > b);
                        let m = initial_continuity_metric(&traj, &vec![0.0; grid.len()], &outside)
                            .map_err(CliError::compute)?;
                        let scale = m.iter().fold(0.0f64, |a, p| a.max(p.1)).max(1e-300);
                        let dt = manifest.dt.unwrap_or(traj.dt());
                        let slack = 10.0 * (h * h + dt) * scale;
                        report.add(
                            "continuity",
                            Diagnostic::at_most(continuity_violation(&m, slack), 0.0)
                                .soft()
                                .with_notes("m(t) = int |u_t| outside the initial liquid, non-decreasing in t"),
                        );
                        report.add_series("continuity_metric", m.iter().map(|p| p.1).collect());
                    }
                    _ => unreachable!("selected from RUN_CHECKS_1D"),
                }
            }
        }
        "solve3d" => {
            let selected = select_checks(checks, &RUN_CHECKS_3D)?;
            let fronts = read_series(dir, &manifest, "front")?;
            for c in &selected {
                match c.as_str() {
                    "front_monotone" => {
                        let step = fronts
                            .windows(2)
                            .flat_map(|w| w[1].values().iter().zip(w[0].values()).map(|(a, b)| a - b).collect::<Vec<_>>())
                            .fold(0.0f64, f64::min);
                        report.add("front_monotone", Diagnostic::at_least(step, -1e-12));
                    }
                    "lipschitz" => {
                        let lips: Vec<f64> = fronts
                            .iter()
                            .map(|f| {
                                stefan_core::GraphFront::new(f.grid().clone(), f.time(), f.values().to_vec())
                                    .map(|g| g.lipschitz())
                            })
                            .collect::<stefan_core::Result<_>>()
                            .map_err(CliError::input)?;
                        let growth = lips.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
                        report.add("lipschitz_nonincreasing", Diagnostic::at_most(growth, 1e-12).soft());
                        report.add_series("lipschitz", lips);
                    }
                    "nonnegative" => {
                        let temps = read_series(dir, &manifest, "temperature")?;
                        let min = temps.iter().map(|t| t.min()).fold(f64::INFINITY, f64::min);
                        report.add("liquid_nonnegative", Diagnostic::at_least(min, 0.0));
                    }
                    _ => unreachable!("selected from RUN_CHECKS_3D"),
                }
            }
        }
        other => return Err(CliError::Usage(format!("verify --run: no run checks for {other:?} outputs"))),
    }
    Ok(report)
}
