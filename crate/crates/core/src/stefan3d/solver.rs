//! Fixed-grid one-phase solver with the front as a graph `z = rho(x, y)`.
//!
//! Temperatures live on nodes: cell centres in `x, y` (insulated side
//! walls by reflection) and `nz + 1` equispaced nodes `z_k = k hz` in the
//! vertical, with `u = f(t)` at `z = 0`. The liquid is `z < rho`. In each
//! column the last liquid node `K` sits a fraction `theta` of a cell below
//! the front and is not stepped: it takes the value of the quadratic
//! through `u = 0` at the front and nodes `K - 1`, `K - 2`, the same
//! quadratic whose slope drives the front. The closure follows the front
//! without lag and leaves the usual explicit stability limit unchanged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::front::{normal_from_slope, GraphFront};
use crate::error::{Error, Result};
use crate::grid::{Axis, CellMask, Grid, TemperatureField};
use crate::heat::HeatTrajectory;
use crate::report::{Diagnostic, RunReport};
use crate::stefan1d::{BoundaryTemperature, FrontTrajectory, Similarity};

/// Initial front shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrontShape {
    Flat { height: f64 },
    /// `height + amplitude * exp(-|(x, y) - center|^2 / width^2)`.
    Bump { height: f64, amplitude: f64, width: f64, center: [f64; 2] },
}

/// Initial liquid temperature below the front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialTemperature3D {
    Zero,
    /// `value * (1 - z / rho(x, y))`.
    Linear { value: f64 },
    /// Neumann profile in `z` at `t_start` under a flat front at the
    /// similarity height; `front` must be omitted.
    Similarity,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_snapshots() -> usize {
    10
}

fn default_front_records() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanSpec3D {
    pub k1: f64,
    /// Box `[0, Lx] x [0, Ly] x [0, H]`.
    pub lengths: [f64; 3],
    /// Cells in `x` and `y`, intervals in `z`.
    pub cells: [usize; 3],
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub boundary: BoundaryTemperature,
    #[serde(default)]
    pub front: Option<FrontShape>,
    pub initial: InitialTemperature3D,
    /// Fraction of `1 / (2/hx^2 + 2/hy^2 + 2/hz^2)`.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_front_records")]
    pub front_records: usize,
}

impl StefanSpec3D {
    pub fn similarity_solution(&self) -> Result<Option<Similarity>> {
        match (&self.initial, &self.boundary) {
            (InitialTemperature3D::Similarity, BoundaryTemperature::Constant { value }) => {
                Ok(Some(Similarity::new(self.k1, *value, 1.0)?))
            }
            (InitialTemperature3D::Similarity, _) => {
                Err(Error::InvalidArgument("similarity data need a constant boundary temperature".into()))
            }
            _ => Ok(None),
        }
    }

    pub fn node_grid(&self) -> Result<Grid> {
        let [lx, ly, h] = self.lengths;
        let [nx, ny, nz] = self.cells;
        let hz = h / nz as f64;
        Grid::new(vec![
            Axis { origin: 0.0, extent: lx, count: nx },
            Axis { origin: 0.0, extent: ly, count: ny },
            Axis { origin: -0.5 * hz, extent: hz * (nz + 1) as f64, count: nz + 1 },
        ])
    }

    pub fn plane_grid(&self) -> Result<Grid> {
        Grid::cells(&[0.0, 0.0], &self.lengths[..2], &self.cells[..2])
    }

    pub fn hz(&self) -> f64 {
        self.lengths[2] / self.cells[2] as f64
    }

    /// Largest step of the explicit scheme, before the `cfl` factor.
    pub fn stability_limit(&self) -> f64 {
        let hx = self.lengths[0] / self.cells[0] as f64;
        let hy = self.lengths[1] / self.cells[1] as f64;
        let hz = self.hz();
        1.0 / (2.0 / (hx * hx) + 2.0 / (hy * hy) + 2.0 / (hz * hz))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidArgument(format!("k1 = {} must be positive", self.k1)));
        }
        if self.lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidGrid(format!("box lengths {:?} must be positive", self.lengths)));
        }
        if !(self.t_start >= 0.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= t_start < t_end, got {} and {}",
                self.t_start, self.t_end
            )));
        }
        for t in [self.t_start, self.t_end] {
            let f = self.boundary.at(t);
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::InvalidArgument(format!("boundary temperature f({t}) = {f} is negative")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!("cfl = {} not in (0, 1]", self.cfl)));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidArgument("snapshots must be at least 1".into()));
        }
        match (&self.initial, &self.front) {
            (InitialTemperature3D::Similarity, Some(_)) => {
                return Err(Error::InvalidArgument("similarity data fix the front; omit `front`".into()))
            }
            (InitialTemperature3D::Similarity, None) if self.t_start <= 0.0 => {
                return Err(Error::InvalidArgument("similarity data need t_start > 0".into()))
            }
            (InitialTemperature3D::Linear { value }, _) if !(*value >= 0.0 && value.is_finite()) => {
                return Err(Error::InvalidArgument(format!("initial value {value} must be >= 0")))
            }
            (InitialTemperature3D::Zero | InitialTemperature3D::Linear { .. }, None) => {
                return Err(Error::InvalidArgument("initial front shape is required".into()))
            }
            _ => {}
        }
        self.node_grid()?;
        Ok(())
    }

    pub fn initial_state(&self) -> Result<State3D> {
        self.validate()?;
        let plane = self.plane_grid()?;
        let sim = self.similarity_solution()?;
        let front = match (&self.front, &sim) {
            (_, Some(s)) => {
                let h = s.front(self.t_start);
                GraphFront::from_fn(plane, self.t_start, |_, _| h)?
            }
            (Some(FrontShape::Flat { height }), None) => GraphFront::from_fn(plane, self.t_start, |_, _| *height)?,
            (Some(FrontShape::Bump { height, amplitude, width, center }), None) => {
                GraphFront::from_fn(plane, self.t_start, |x, y| {
                    let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                    height + amplitude * (-r2 / (width * width)).exp()
                })?
            }
            (None, None) => unreachable!("validated"),
        };
        let hz = self.hz();
        if front.min_height() < 3.0 * hz || front.max_height() >= self.lengths[2] {
            return Err(Error::InvalidArgument(format!(
                "initial front heights [{}, {}] must lie in [3 hz, H) = [{}, {})",
                front.min_height(),
                front.max_height(),
                3.0 * hz,
                self.lengths[2]
            )));
        }
        let grid = self.node_grid()?;
        let nzp = self.cells[2] + 1;
        let f0 = self.boundary.at(self.t_start);
        let rho = front.heights();
        let mut u = vec![0.0; grid.len()];
        for (c, col) in u.chunks_mut(nzp).enumerate() {
            let (last, theta) = column_layout(rho[c], hz);
            for (k, v) in col.iter_mut().enumerate().take(last + 1) {
                let z = k as f64 * hz;
                *v = match (&self.initial, &sim) {
                    (_, Some(s)) => s.temperature(z, self.t_start),
                    (InitialTemperature3D::Linear { value }, _) => value * (1.0 - z / rho[c]),
                    _ => 0.0,
                };
            }
            col[0] = f0;
            col[last] = closure(theta, col[last - 1], col[last - 2]);
        }
        let domain = PhaseDomain::new(TemperatureField::new(grid, self.t_start, u)?, &front)?;
        Ok(State3D { domain, front })
    }
}

/// Value at the last liquid node from the quadratic through `u = 0` at
/// distance `theta` above it and the two nodes below, floored at zero.
pub fn closure(theta: f64, below: f64, two_below: f64) -> f64 {
    let w1 = 2.0 * theta / (1.0 + theta);
    let w2 = -theta / (2.0 + theta);
    (w1 * below + w2 * two_below).max(0.0)
}

/// Index `K` of the last node below the front and its gap `theta` in (0, 1].
pub fn column_layout(rho: f64, hz: f64) -> (usize, f64) {
    let last = ((rho / hz).ceil() as usize).max(1) - 1;
    (last, (rho - last as f64 * hz) / hz)
}

/// Nodal temperatures with the liquid mask `z < rho(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDomain {
    pub u: TemperatureField,
    pub liquid: CellMask,
}

impl PhaseDomain {
    /// Builds the mask from the front; `u` must vanish outside it.
    pub fn new(u: TemperatureField, front: &GraphFront) -> Result<Self> {
        let g = u.grid();
        let shape = g.shape();
        if g.dim() != 3 || front.grid().shape()[..2] != shape[..2] {
            return Err(Error::Shape("temperature and front grids disagree".into()));
        }
        let hz = g.spacing(2);
        let rho = front.heights();
        let bits: Vec<bool> = (0..g.len()).map(|i| (i % shape[2]) as f64 * hz < rho[i / shape[2]]).collect();
        if let Some(i) = (0..g.len()).find(|&i| !bits[i] && u.values()[i] != 0.0) {
            return Err(Error::InvalidArgument(format!("temperature nonzero above the front at node {i}")));
        }
        let liquid = CellMask::new(g.clone(), bits)?;
        Ok(Self { u, liquid })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State3D {
    pub domain: PhaseDomain,
    pub front: GraphFront,
}

impl State3D {
    pub fn time(&self) -> f64 {
        self.domain.u.time()
    }
}

struct Geometry {
    nx: usize,
    ny: usize,
    nzp: usize,
    hx: f64,
    hy: f64,
    hz: f64,
}

impl Geometry {
    fn of(grid: &Grid) -> Self {
        let s = grid.shape();
        Self { nx: s[0], ny: s[1], nzp: s[2], hx: grid.spacing(0), hy: grid.spacing(1), hz: grid.spacing(2) }
    }

    /// Column neighbours `[x-, x+, y-, y+]`, reflected at the side walls.
    fn neighbours(&self, c: usize) -> [usize; 4] {
        let (i, j) = (c / self.ny, c % self.ny);
        [
            if i == 0 { c } else { c - self.ny },
            if i + 1 == self.nx { c } else { c + self.ny },
            if j == 0 { c } else { c - 1 },
            if j + 1 == self.ny { c } else { c + 1 },
        ]
    }
}

/// `grad u` at the front of each column: `u_z` from the quadratic through
/// the front (where `u = 0`) and the two nearest independent nodes below
/// it; `u_x`, `u_y` by differences across columns at the upper of those
/// nodes, central where both neighbours are liquid, one-sided otherwise.
pub fn front_gradients(domain: &PhaseDomain, front: &GraphFront) -> Result<Vec<[f64; 3]>> {
    let g = Geometry::of(domain.u.grid());
    let rho = front.heights();
    let u = domain.u.values();
    let layouts: Vec<(usize, f64)> = rho.iter().map(|&r| column_layout(r, g.hz)).collect();
    let liquid = |c: usize, k: usize| k <= layouts[c].0;
    (0..g.nx * g.ny)
        .map(|c| {
            if rho[c] < 3.0 * g.hz {
                return Err(Error::Underresolved(format!(
                    "liquid layer in column {c} is {:.3e} thick, less than three cells",
                    rho[c]
                )));
            }
            let top = layouts[c].0 - 1;
            let (p1, p2) = (top as f64 * g.hz, (top - 1) as f64 * g.hz);
            let (u1, u2) = (u[c * g.nzp + top], u[c * g.nzp + top - 1]);
            let r = rho[c];
            let uz = u1 * (r - p2) / ((p1 - r) * (p1 - p2)) + u2 * (r - p1) / ((p2 - r) * (p2 - p1));
            let (i, j) = (c / g.ny, c % g.ny);
            let across = |idx: usize, n: usize, h: f64, col: &dyn Fn(usize) -> usize| {
                let at = |a: usize| u[col(a) * g.nzp + top];
                let ok = |a: usize| liquid(col(a), top);
                let lo = idx > 0 && ok(idx - 1);
                let hi = idx + 1 < n && ok(idx + 1);
                match (lo, hi) {
                    (true, true) => (at(idx + 1) - at(idx - 1)) / (2.0 * h),
                    (true, false) => (at(idx) - at(idx - 1)) / h,
                    (false, true) => (at(idx + 1) - at(idx)) / h,
                    (false, false) => 0.0,
                }
            };
            let ux = across(i, g.nx, g.hx, &|a| a * g.ny + j);
            let uy = across(j, g.ny, g.hy, &|b| i * g.ny + b);
            Ok([ux, uy, uz])
        })
        .collect()
}

/// `V_n = -k1 grad u . n` per column.
pub fn normal_velocity(domain: &PhaseDomain, front: &GraphFront, k1: f64) -> Result<Vec<f64>> {
    let grads = front_gradients(domain, front)?;
    Ok(front
        .slopes()
        .into_iter()
        .zip(grads)
        .map(|(s, du)| {
            let n = normal_from_slope(s);
            -k1 * (du[0] * n[0] + du[1] * n[1] + du[2] * n[2])
        })
        .collect())
}

/// Result of one front update.
#[derive(Clone, Debug)]
pub struct FrontUpdate {
    pub front: GraphFront,
    /// `max |(rho' - rho) - dt V_n sqrt(1 + |grad rho|^2)|`.
    pub consistency: f64,
    /// `max ||n| - 1|`.
    pub normal_defect: f64,
}

/// `rho' = rho - dt k1 (u_z - rho_x u_x - rho_y u_y)`, checked against
/// the normal-velocity form.
pub fn evolve_front(front: &GraphFront, domain: &PhaseDomain, k1: f64, dt: f64) -> Result<FrontUpdate> {
    let grads = front_gradients(domain, front)?;
    let slopes = front.slopes();
    let rho = front.heights();
    let top = domain.u.grid().spacing(2) * (domain.u.grid().shape()[2] - 1) as f64;
    let mut consistency: f64 = 0.0;
    let mut normal_defect: f64 = 0.0;
    let mut next = Vec::with_capacity(rho.len());
    for c in 0..rho.len() {
        let [sx, sy] = slopes[c];
        let [ux, uy, uz] = grads[c];
        let r = rho[c] - dt * k1 * (uz - sx * ux - sy * uy);
        let n = normal_from_slope(slopes[c]);
        let vn = -k1 * (ux * n[0] + uy * n[1] + uz * n[2]);
        let metric = (1.0 + sx * sx + sy * sy).sqrt();
        consistency = consistency.max(((r - rho[c]) - dt * vn * metric).abs());
        normal_defect = normal_defect.max(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() - 1.0).abs());
        if !(r > 0.0 && r < top) {
            return Err(Error::FrontExit(format!("front height {r} left (0, {top}) in column {c}")));
        }
        next.push(r);
    }
    Ok(FrontUpdate { front: front.with_heights(front.time() + dt, next)?, consistency, normal_defect })
}

/// Outcome of one coupled step.
#[derive(Clone, Debug)]
pub struct Step3D {
    pub state: State3D,
    pub consistency: f64,
    pub normal_defect: f64,
    /// Fraction of liquid nodes that solidified in the re-masking.
    pub removed_fraction: f64,
}

/// Explicit heat step in the liquid, front update from the temperatures at
/// the start of the step (both forward Euler), then re-masking (newly
/// liquid nodes start at zero).
pub fn coupled_step_3d(spec: &StefanSpec3D, state: &State3D, dt: f64) -> Result<Step3D> {
    let limit = spec.stability_limit();
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Unstable { dt, limit });
    }
    let grid = state.domain.u.grid();
    let g = Geometry::of(grid);
    let rho = state.front.heights();
    for (c, r) in rho.iter().enumerate() {
        if *r < 3.0 * g.hz {
            return Err(Error::Underresolved(format!("liquid layer in column {c} thinner than three cells")));
        }
    }
    let t_next = state.time() + dt;
    let f_next = spec.boundary.at(t_next);
    let layouts: Vec<(usize, f64)> = rho.iter().map(|&r| column_layout(r, g.hz)).collect();
    let u = state.domain.u.values();
    let (ix2, iy2, iz2) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy), 1.0 / (g.hz * g.hz));
    let mut heated = vec![0.0; u.len()];
    heated.par_chunks_mut(g.nzp).enumerate().for_each(|(c, col)| {
        let (last, theta) = layouts[c];
        let nb = g.neighbours(c);
        let val = |cc: usize, k: usize| if k <= layouts[cc].0 { u[cc * g.nzp + k] } else { 0.0 };
        let base = c * g.nzp;
        col[0] = f_next;
        for k in 1..last {
            let uc = u[base + k];
            let lateral = (val(nb[1], k) - 2.0 * uc + val(nb[0], k)) * ix2 + (val(nb[3], k) - 2.0 * uc + val(nb[2], k)) * iy2;
            let vertical = (u[base + k + 1] - 2.0 * uc + u[base + k - 1]) * iz2;
            col[k] = uc + dt * (lateral + vertical);
        }
        col[last] = closure(theta, col[last - 1], col[last - 2]);
    });
    let heated = PhaseDomain { u: state.domain.u.with_values(t_next, heated)?, liquid: state.domain.liquid.clone() };
    let update = evolve_front(&state.front, &state.domain, spec.k1, dt)?;

    let new_rho = update.front.heights();
    let mut values = heated.u.into_values();
    let before = state.domain.liquid.count();
    let mut removed = 0usize;
    for (c, col) in values.chunks_mut(g.nzp).enumerate() {
        let (old_last, _) = layouts[c];
        let (last, theta) = column_layout(new_rho[c], g.hz);
        for (k, v) in col.iter_mut().enumerate() {
            if k > last {
                if k <= old_last {
                    removed += 1;
                }
                *v = 0.0;
            } else if k > old_last {
                *v = 0.0;
            }
        }
        col[last] = closure(theta, col[last - 1], col[last - 2]);
    }
    let removed_fraction = removed as f64 / before.max(1) as f64;
    if removed_fraction > 0.2 {
        return Err(Error::Unstable { dt, limit: dt * 0.2 / removed_fraction });
    }
    let domain = PhaseDomain::new(TemperatureField::new(grid.clone(), t_next, values)?, &update.front)?;
    Ok(Step3D {
        state: State3D { domain, front: update.front },
        consistency: update.consistency,
        normal_defect: update.normal_defect,
        removed_fraction,
    })
}

/// Output of a 3D run.
#[derive(Debug)]
pub struct Stefan3DRun {
    pub temperatures: HeatTrajectory,
    pub fronts: Vec<GraphFront>,
    /// Mean front height over time.
    pub front: FrontTrajectory,
    pub report: RunReport,
    pub final_state: State3D,
    pub steps: usize,
    pub dt: f64,
    pub failure: Option<Error>,
}

/// Runs to `t_end`, stopping early on a fatal step error (kept in `failure`).
pub fn run_stefan3d(spec: &StefanSpec3D) -> Result<Stefan3DRun> {
    let init = spec.initial_state()?;
    let span = spec.t_end - spec.t_start;
    let stride = (span / (spec.cfl * spec.stability_limit()) / spec.snapshots as f64).ceil().max(1.0) as usize;
    let n_steps = stride * spec.snapshots;
    let dt = span / n_steps as f64;
    let records = spec.front_records.max(1);
    let recorded = |i: usize| i == 0 || i == n_steps || (i * records) / n_steps > ((i - 1) * records) / n_steps;
    let mean = |f: &GraphFront| f.heights().iter().sum::<f64>() / f.heights().len() as f64;
    let scale = [spec.boundary.at(spec.t_start), spec.boundary.at(spec.t_end), init.domain.u.sup_norm(), 1.0]
        .into_iter()
        .fold(0.0, f64::max);

    let mut temps = vec![init.domain.u.clone()];
    let mut fronts = vec![init.front.clone()];
    let mut front = FrontTrajectory::default();
    let mut spread = Vec::new();
    let mut lipschitz = Vec::new();
    let mut state = init;
    let mut failure = None;
    let (mut consistency, mut normal_defect, mut removed): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut min_increment = f64::INFINITY;
    let mut min_u = f64::INFINITY;
    let mut lip_growth = f64::NEG_INFINITY;
    let mut steps = 0;
    let mut last_mean = mean(&state.front);
    let mut lip = state.front.lipschitz();
    if recorded(0) {
        front.push(state.time(), last_mean, 0.0);
        spread.push(state.front.max_height() - state.front.min_height());
        lipschitz.push(lip);
    }
    for k in 0..n_steps {
        let mut out = match coupled_step_3d(spec, &state, dt) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let t = if k + 1 == n_steps { spec.t_end } else { spec.t_start + (k + 1) as f64 * dt };
        out.state.domain.u = out.state.domain.u.with_values(t, out.state.domain.u.values().to_vec())?;
        out.state.front = out.state.front.with_heights(t, out.state.front.heights().to_vec())?;
        consistency = consistency.max(out.consistency);
        normal_defect = normal_defect.max(out.normal_defect);
        removed = removed.max(out.removed_fraction);
        for (a, b) in state.front.heights().iter().zip(out.state.front.heights()) {
            min_increment = min_increment.min(b - a);
        }
        min_u = out.state.domain.u.values().iter().fold(min_u, |m, v| m.min(*v));
        let new_lip = out.state.front.lipschitz();
        lip_growth = lip_growth.max(new_lip - lip);
        lip = new_lip;
        let m = mean(&out.state.front);
        let velocity = (m - last_mean) / dt;
        last_mean = m;
        state = out.state;
        steps = k + 1;
        if recorded(steps) {
            front.push(t, m, velocity);
            spread.push(state.front.max_height() - state.front.min_height());
            lipschitz.push(lip);
        }
        if steps % stride == 0 {
            temps.push(state.domain.u.clone());
            fronts.push(state.front.clone());
        }
    }
    if failure.is_some() {
        front.push(state.time(), last_mean, f64::NAN);
    }

    let mut report = RunReport::new("solve3d");
    report.add("consistency_identity", Diagnostic::at_most(consistency, 1e-10));
    report.add("normal_unit", Diagnostic::at_most(normal_defect, 1e-12));
    report.add("liquid_nonnegative", Diagnostic::at_least(if steps == 0 { 0.0 } else { min_u }, -1e-12 * scale));
    report.add("front_monotone", Diagnostic::at_least(if steps == 0 { 0.0 } else { min_increment }, -1e-12));
    report.add("remask_fraction", Diagnostic::at_most(removed, 0.2));
    report.add(
        "lipschitz_growth",
        Diagnostic::at_most(if steps == 0 { 0.0 } else { lip_growth }, 0.0)
            .soft()
            .with_notes(format!("largest per-step increase of max(|rho_x|, |rho_y|); final value {lip:e}")),
    );
    if let Some(sim) = spec.similarity_solution()? {
        let exact = sim.front(state.time());
        report.add("similarity_front_error", Diagnostic::at_most((last_mean - exact).abs() / exact, 0.01));
    }
    report.add_series("front_spread", spread);
    report.add_series("lipschitz", lipschitz);
    if let Some(e) = &failure {
        report.failure = Some(e.to_string());
    }
    Ok(Stefan3DRun {
        temperatures: HeatTrajectory::new(stride as f64 * dt, temps)?,
        fronts,
        front,
        report,
        final_state: state,
        steps,
        dt,
        failure,
    })
}

/// Runs to `t_end`; a fatal step error is returned as the error.
pub fn solve_stefan3d(spec: &StefanSpec3D) -> Result<Stefan3DRun> {
    let mut run = run_stefan3d(spec)?;
    match run.failure.take() {
        Some(e) => Err(e),
        None => Ok(run),
    }
}
