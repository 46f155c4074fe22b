//! Caloric replacement on backward parabolic cylinders and the radial
//! average built from it.
//!
//! The replacement of `w` on `C_r(x0, t0)` solves the heat equation on the
//! cells whose centres lie in the ball `|x - x0| < r`, with `w` imposed on
//! the bottom slice and on the lateral layer (ball cells that touch a cell
//! outside the ball). Time levels come from the samples of `w`.

use rayon::prelude::*;

use super::explicit::HeatTrajectory;
use crate::error::{Error, Result};
use crate::grid::{CellMask, Grid, ParabolicCylinder, Point, TemperatureField};

/// Samples of a space-time function on a grid at uniformly spaced levels.
pub trait SpaceTimeData {
    fn grid(&self) -> &Grid;
    fn start_time(&self) -> f64;
    fn dt(&self) -> f64;
    fn levels(&self) -> usize;
    fn value(&self, cell: usize, level: usize) -> f64;

    fn time(&self, level: usize) -> f64 {
        self.start_time() + level as f64 * self.dt()
    }
}

impl SpaceTimeData for HeatTrajectory {
    fn grid(&self) -> &Grid {
        HeatTrajectory::grid(self)
    }

    fn start_time(&self) -> f64 {
        self.first().time()
    }

    fn dt(&self) -> f64 {
        HeatTrajectory::dt(self)
    }

    fn levels(&self) -> usize {
        self.len()
    }

    fn value(&self, cell: usize, level: usize) -> f64 {
        self.snapshots()[level].values()[cell]
    }

    fn time(&self, level: usize) -> f64 {
        self.snapshots()[level].time()
    }
}

/// A space-time function sampled lazily at cell centres and time levels.
pub struct SampledFn<F> {
    grid: Grid,
    start: f64,
    dt: f64,
    levels: usize,
    f: F,
}

impl<F: Fn(&Point, f64) -> f64> SampledFn<F> {
    pub fn new(grid: Grid, start: f64, dt: f64, levels: usize, f: F) -> Result<Self> {
        if !(dt > 0.0) || levels < 2 {
            return Err(Error::InvalidArgument("sampling needs dt > 0 and two levels".into()));
        }
        Ok(Self { grid, start, dt, levels, f })
    }
}

impl<F: Fn(&Point, f64) -> f64> SpaceTimeData for SampledFn<F> {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn start_time(&self) -> f64 {
        self.start
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn levels(&self) -> usize {
        self.levels
    }

    fn value(&self, cell: usize, level: usize) -> f64 {
        (self.f)(&self.grid.center(cell), self.time(level))
    }
}

/// Result of a caloric replacement.
#[derive(Clone, Debug)]
pub struct CaloricReplacement {
    /// `z` on the whole grid from the bottom level to the top level;
    /// cells outside the ball carry the samples of `w`.
    pub trajectory: HeatTrajectory,
    /// Cells whose centres lie in the ball.
    pub inside: CellMask,
    /// Inside cells with every face neighbour inside; `z` is caloric here.
    pub interior: CellMask,
    /// Level of `w` used as the bottom slice.
    pub start_level: usize,
}

impl CaloricReplacement {
    pub fn lateral(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.indices().filter(|&i| !self.interior.get(i))
    }

    /// `z` at the top slice.
    pub fn top(&self) -> &TemperatureField {
        self.trajectory.last()
    }
}

fn level_of(w: &impl SpaceTimeData, t: f64) -> Option<usize> {
    let k = ((t - w.start_time()) / w.dt()).round();
    (k >= 0.0 && (k as usize) < w.levels()).then_some(k as usize)
}

/// Solves `Laplacian z = z_t` in the cylinder with `z = w` on its discrete
/// parabolic boundary.
pub fn caloric_replacement(w: &impl SpaceTimeData, cyl: &ParabolicCylinder) -> Result<CaloricReplacement> {
    let grid = w.grid();
    let dim = grid.dim();
    for (k, a) in grid.axes().iter().enumerate() {
        if 2.0 * cyl.radius < 4.0 * a.spacing() {
            return Err(Error::Underresolved(format!(
                "cylinder of radius {} spans fewer than 4 cells on axis {k}",
                cyl.radius
            )));
        }
        let lo = a.origin;
        let hi = a.origin + a.extent;
        if cyl.center[k] - cyl.radius < lo || cyl.center[k] + cyl.radius > hi {
            return Err(Error::InvalidArgument(format!("cylinder leaves the sampled box on axis {k}")));
        }
    }
    let top = level_of(w, cyl.top)
        .filter(|&k| (w.time(k) - cyl.top).abs() <= 1e-6 * w.dt())
        .ok_or_else(|| Error::InvalidArgument(format!("cylinder top {} is not a sampled level", cyl.top)))?;
    let start = level_of(w, cyl.bottom())
        .ok_or_else(|| Error::InvalidArgument(format!("cylinder bottom {} precedes the samples", cyl.bottom())))?;
    if start >= top {
        return Err(Error::Underresolved("cylinder shorter than one time level".into()));
    }
    let dt = w.dt();
    let h = grid.min_spacing();
    let limit = h * h / (2.0 * dim as f64);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Unstable { dt, limit });
    }

    let inside = CellMask::from_fn(grid, |p| cyl.in_ball(p));
    let mut interior = inside.clone();
    for i in inside.indices() {
        if grid.is_boundary(i) || grid.face_neighbors(i).any(|j| !inside.get(j)) {
            interior.set(i, false);
        }
    }

    let st = grid.strides();
    let inv_h2: Vec<f64> = grid.axes().iter().map(|a| 1.0 / (a.spacing() * a.spacing())).collect();
    let interior_cells: Vec<usize> = interior.indices().collect();
    let sample = |level: usize| -> Result<TemperatureField> {
        let values = (0..grid.len()).map(|i| w.value(i, level)).collect();
        TemperatureField::new(grid.clone(), w.time(level), values)
    };

    let mut z = sample(start)?;
    let mut snapshots = vec![z.clone()];
    for level in (start + 1)..=top {
        let next_w = sample(level)?;
        let u = z.values();
        let mut next = next_w.values().to_vec();
        for &i in &interior_cells {
            let mut lap = 0.0;
            for (k, s) in inv_h2.iter().enumerate() {
                lap += (u[i + st[k]] - 2.0 * u[i] + u[i - st[k]]) * s;
            }
            next[i] = u[i] + dt * lap;
        }
        z = next_w.with_values(next_w.time(), next)?;
        snapshots.push(z.clone());
    }
    Ok(CaloricReplacement { trajectory: HeatTrajectory::new(dt, snapshots)?, inside, interior, start_level: start })
}

/// `(1/R) int_R^{2R} z_r(x0, t0) dr` by the `m`-point trapezoid rule in `r`,
/// where `z_r` is the caloric replacement of `w` on `C_r(x0, t0)`.
/// `x0` must be a cell centre.
pub fn radial_average(w: &(impl SpaceTimeData + Sync), x0: &Point, t0: f64, radius: f64, m: usize) -> Result<f64> {
    let values = radial_profile(w, x0, t0, radius, m)?;
    let step = radius / (m - 1) as f64;
    let integral: f64 = values
        .iter()
        .enumerate()
        .map(|(i, (_, z))| if i == 0 || i + 1 == m { 0.5 * z } else { *z })
        .sum::<f64>()
        * step;
    Ok(integral / radius)
}

/// The radii `r_i` in `[R, 2R]` and the centre values `z_{r_i}(x0, t0)`.
pub fn radial_profile(
    w: &(impl SpaceTimeData + Sync),
    x0: &Point,
    t0: f64,
    radius: f64,
    m: usize,
) -> Result<Vec<(f64, f64)>> {
    if m < 2 {
        return Err(Error::InvalidArgument("radial average needs at least two radii".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
    }
    let grid = w.grid();
    let tol = 1e-9 * grid.min_spacing();
    let centre = (0..grid.len())
        .find(|&i| {
            let c = grid.center(i);
            (0..3).all(|k| (c[k] - x0[k]).abs() <= tol)
        })
        .ok_or_else(|| Error::InvalidArgument(format!("{x0:?} is not a cell centre")))?;
    (0..m)
        .into_par_iter()
        .map(|i| {
            let r = radius * (1.0 + i as f64 / (m - 1) as f64);
            let cyl = ParabolicCylinder::new(*x0, t0, r)?;
            let rep = caloric_replacement(w, &cyl)?;
            Ok((r, rep.top().values()[centre]))
        })
        .collect()
}
