//! Front-tracking solver in the Landau frame.
//!
//! The liquid `0 < x < s(t)` is mapped to `xi = x / s` on `[0, 1]`, where
//! `u_t = D u_xx` becomes `U_t = D U_xixi / s^2 + xi (s'/s) U_xi`. In
//! two-phase mode the solid `s < x < L` is mapped to `eta = (x - s)/(L - s)`
//! with `W_t = D_S W_etaeta / (L-s)^2 + s' (1 - eta)/(L - s) W_eta`. Both
//! equations and the front ODE are advanced in lock step by forward Euler.

use serde::{Deserialize, Serialize};

use super::front::FrontTrajectory;
use super::similarity::Similarity;
use crate::error::{Error, Result};
use crate::grid::{Grid, TemperatureField};
use crate::heat::HeatTrajectory;
use crate::report::{Diagnostic, RunReport};

/// Prescribed temperature `f(t)` at `x = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryTemperature {
    Constant { value: f64 },
    /// `value + slope * t`.
    Ramp { value: f64, slope: f64 },
}

impl BoundaryTemperature {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Ramp { value, slope } => value + slope * t,
        }
    }
}

/// Initial liquid temperature on `[0, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialTemperature {
    Zero,
    /// `value * (1 - x / b)`.
    Linear { value: f64 },
    /// Neumann profile at `t_start`; `b` follows from the similarity front.
    Similarity,
    /// Values at equally spaced points of `[0, b]`, interpolated linearly.
    Samples { values: Vec<f64> },
}

/// Solid phase on `[s, L]` for two-phase runs. Starts linear from zero at
/// the front to `temperature` at `x = L`, which is held fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondPhase {
    pub k2: f64,
    #[serde(default = "one")]
    pub diffusivity: f64,
    pub length: f64,
    pub temperature: f64,
    pub cells: usize,
}

fn one() -> f64 {
    1.0
}

fn default_cfl() -> f64 {
    0.4
}

fn default_snapshots() -> usize {
    10
}

fn default_front_records() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StefanSpec1D {
    /// Front speed constant: `s' = -k1 u_x(s-)`.
    pub k1: f64,
    #[serde(default = "one")]
    pub diffusivity: f64,
    /// Initial front; optional only for similarity data.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub boundary: BoundaryTemperature,
    pub initial: InitialTemperature,
    /// Mapped cells in the liquid.
    pub cells: usize,
    /// Fraction of the explicit stability limit at the initial geometry.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Number of snapshot intervals stored in the trajectory.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Approximate number of front samples recorded.
    #[serde(default = "default_front_records")]
    pub front_records: usize,
    #[serde(default)]
    pub second_phase: Option<SecondPhase>,
}

impl StefanSpec1D {
    /// One-phase similarity benchmark with `theta = D = 1`.
    pub fn similarity(k1: f64, t_start: f64, t_end: f64, cells: usize) -> Self {
        Self {
            k1,
            diffusivity: 1.0,
            b: None,
            t_start,
            t_end,
            boundary: BoundaryTemperature::Constant { value: 1.0 },
            initial: InitialTemperature::Similarity,
            cells,
            cfl: default_cfl(),
            snapshots: default_snapshots(),
            front_records: default_front_records(),
            second_phase: None,
        }
    }

    /// Similarity solution matching this spec, when the data are of that form.
    pub fn similarity_solution(&self) -> Result<Option<Similarity>> {
        match (&self.initial, &self.boundary, &self.second_phase) {
            (InitialTemperature::Similarity, BoundaryTemperature::Constant { value }, None) => {
                Ok(Some(Similarity::new(self.k1, *value, self.diffusivity)?))
            }
            (InitialTemperature::Similarity, _, _) => Err(Error::InvalidArgument(
                "similarity data need a constant boundary temperature and a single phase".into(),
            )),
            _ => Ok(None),
        }
    }

    pub fn initial_front(&self) -> Result<f64> {
        let derived = match self.similarity_solution()? {
            Some(sim) => {
                if self.t_start <= 0.0 {
                    return Err(Error::InvalidArgument("similarity data need t_start > 0".into()));
                }
                Some(sim.front(self.t_start))
            }
            None => None,
        };
        let b = match (self.b, derived) {
            (Some(b), Some(d)) if (b - d).abs() > 1e-9 * d => {
                return Err(Error::InvalidArgument(format!(
                    "b = {b} disagrees with the similarity front {d} at t_start"
                )))
            }
            (Some(b), _) => b,
            (None, Some(d)) => d,
            (None, None) => return Err(Error::InvalidArgument("initial front b is required".into())),
        };
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("initial front b = {b} must be positive")));
        }
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} = {v} must be positive")))
            }
        };
        positive("k1", self.k1)?;
        positive("diffusivity", self.diffusivity)?;
        let b = self.initial_front()?;
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
        if self.cells < 3 {
            return Err(Error::Underresolved(format!("{} liquid cells; need at least 3", self.cells)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!("cfl = {} not in (0, 1]", self.cfl)));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidArgument("snapshots must be at least 1".into()));
        }
        match &self.initial {
            InitialTemperature::Linear { value } if !(*value >= 0.0 && value.is_finite()) => {
                return Err(Error::InvalidArgument(format!("initial slope value {value} must be >= 0")))
            }
            InitialTemperature::Samples { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidArgument("initial samples need at least two values".into()));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::InvalidArgument("initial samples must be finite and >= 0".into()));
                }
                if values[values.len() - 1] != 0.0 {
                    return Err(Error::InvalidArgument("initial samples must vanish at the front".into()));
                }
            }
            _ => {}
        }
        if let Some(p) = &self.second_phase {
            positive("k2", p.k2)?;
            positive("solid diffusivity", p.diffusivity)?;
            if !(p.length > b && p.length.is_finite()) {
                return Err(Error::InvalidArgument(format!("domain length {} must exceed b = {b}", p.length)));
            }
            if !(p.temperature <= 0.0 && p.temperature.is_finite()) {
                return Err(Error::InvalidArgument(format!("solid temperature {} must be <= 0", p.temperature)));
            }
            if p.cells < 3 {
                return Err(Error::Underresolved(format!("{} solid cells; need at least 3", p.cells)));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<FrontState1D> {
        self.validate()?;
        let b = self.initial_front()?;
        let n = self.cells;
        let xi = |j: usize| j as f64 / n as f64;
        let mut liquid: Vec<f64> = match &self.initial {
            InitialTemperature::Zero => vec![0.0; n + 1],
            InitialTemperature::Linear { value } => (0..=n).map(|j| value * (1.0 - xi(j))).collect(),
            InitialTemperature::Similarity => {
                let sim = self.similarity_solution()?.expect("checked by initial_front");
                (0..=n).map(|j| sim.temperature(xi(j) * b, self.t_start)).collect()
            }
            InitialTemperature::Samples { values } => (0..=n).map(|j| interpolate(values, xi(j))).collect(),
        };
        liquid[0] = self.boundary.at(self.t_start);
        liquid[n] = 0.0;
        let solid = self.second_phase.as_ref().map(|p| {
            (0..=p.cells).map(|i| p.temperature * i as f64 / p.cells as f64).collect::<Vec<_>>()
        });
        Ok(FrontState1D { time: self.t_start, front: b, liquid, solid })
    }

    /// Explicit stability limit `min h^2 / 2D` at the initial geometry.
    pub fn stability_limit(&self) -> Result<f64> {
        Ok(self.max_step(self.initial_front()?) / self.cfl)
    }

    /// Largest `cfl`-scaled stable step at the initial geometry.
    fn max_step(&self, b: f64) -> f64 {
        let dxi = 1.0 / self.cells as f64;
        let mut limit = (b * dxi).powi(2) / (2.0 * self.diffusivity);
        if let Some(p) = &self.second_phase {
            let deta = 1.0 / p.cells as f64;
            limit = limit.min(((p.length - b) * deta).powi(2) / (2.0 * p.diffusivity));
        }
        self.cfl * limit
    }

    fn scale(&self, initial: &FrontState1D) -> f64 {
        let mut scale = 1.0f64;
        scale = scale.max(self.boundary.at(self.t_start)).max(self.boundary.at(self.t_end));
        scale = initial.liquid.iter().fold(scale, |a, v| a.max(v.abs()));
        if let Some(p) = &self.second_phase {
            scale = scale.max(p.temperature.abs());
        }
        scale
    }
}

fn interpolate(values: &[f64], xi: f64) -> f64 {
    let m = values.len() - 1;
    let pos = xi * m as f64;
    let k = (pos.floor() as usize).min(m - 1);
    let w = pos - k as f64;
    values[k] * (1.0 - w) + values[k + 1] * w
}

/// Front position and nodal temperatures on the mapped grids.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontState1D {
    pub time: f64,
    pub front: f64,
    /// `U_j` at `xi_j = j / N`, `j = 0..=N`; `U_N = 0`.
    pub liquid: Vec<f64>,
    /// `W_i` at `eta_i = i / M`; `W_0 = 0`.
    pub solid: Option<Vec<f64>>,
}

/// `u_x(s-)` from the one-sided three-point formula on the mapped liquid
/// grid, with `u(s) = 0` imposed.
pub fn front_gradient(u: &[f64], s: f64) -> Result<f64> {
    if u.len() < 4 {
        return Err(Error::Underresolved(format!("{} liquid cells at the front; need 3", u.len().saturating_sub(1))));
    }
    let n = u.len() - 1;
    let h = s / n as f64;
    Ok((u[n - 2] - 4.0 * u[n - 1]) / (2.0 * h))
}

/// `u_x(s+)` on the mapped solid grid of `[s, length]`, with `u(s) = 0`.
pub fn solid_front_gradient(w: &[f64], s: f64, length: f64) -> Result<f64> {
    if w.len() < 4 {
        return Err(Error::Underresolved(format!("{} solid cells at the front; need 3", w.len().saturating_sub(1))));
    }
    let h = (length - s) / (w.len() - 1) as f64;
    Ok((4.0 * w[1] - w[2]) / (2.0 * h))
}

/// `s' = k2 u_x(s+) - k1 u_x(s-)`, the solid term only in two-phase mode.
pub fn front_velocity(spec: &StefanSpec1D, state: &FrontState1D) -> Result<f64> {
    let mut v = -spec.k1 * front_gradient(&state.liquid, state.front)?;
    if let (Some(p), Some(w)) = (&spec.second_phase, &state.solid) {
        v += p.k2 * solid_front_gradient(w, state.front, p.length)?;
    }
    Ok(v)
}

struct Advance {
    state: FrontState1D,
    velocity: f64,
    /// Physical `u_t` at interior liquid nodes over the step.
    ut: Vec<f64>,
    /// Largest departure of a new interior value from its stencil's range.
    excess: f64,
}

/// One explicit step of a mapped phase. `advect[j]` multiplies the
/// centred `U_xi` term; `diff` multiplies the second difference.
fn advance_phase(u: &[f64], diff: f64, advect: impl Fn(usize) -> f64, dt: f64, left: f64, right: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let n = u.len() - 1;
    let mut next = vec![0.0; n + 1];
    let mut rate = vec![0.0; n + 1];
    let mut excess: f64 = 0.0;
    for j in 1..n {
        let lap = diff * (u[j + 1] - 2.0 * u[j] + u[j - 1]);
        let adv = advect(j) * (u[j + 1] - u[j - 1]);
        next[j] = u[j] + dt * (lap + adv);
        rate[j] = lap;
        let lo = u[j - 1].min(u[j]).min(u[j + 1]);
        let hi = u[j - 1].max(u[j]).max(u[j + 1]);
        excess = excess.max(lo - next[j]).max(next[j] - hi);
    }
    next[0] = left;
    next[n] = right;
    (next, rate, excess)
}

/// Forward Euler stability and monotonicity of one mapped phase of
/// physical width `width`: `dt <= h^2 / 2D` and cell Peclet `|v| h / 2D <= 1`.
fn check_phase(width: f64, cells: usize, diffusivity: f64, speed: f64, dt: f64) -> Result<()> {
    let h = width / cells as f64;
    let limit = h * h / (2.0 * diffusivity);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Unstable { dt, limit });
    }
    let peclet = speed * h / (2.0 * diffusivity);
    if peclet > 1.0 {
        return Err(Error::Underresolved(format!("cell Peclet number {peclet:.3} exceeds 1")));
    }
    Ok(())
}

fn advance(spec: &StefanSpec1D, state: &FrontState1D, dt: f64) -> Result<Advance> {
    let v = front_velocity(spec, state)?;
    let s = state.front;
    let n = state.liquid.len() - 1;
    let dxi = 1.0 / n as f64;
    check_phase(s, n, spec.diffusivity, v.abs(), dt)?;
    let s_next = s + dt * v;
    let t_next = state.time + dt;
    if !(s_next > 0.0) {
        return Err(Error::FrontExit(format!("front reached {s_next} at t = {t_next}")));
    }
    let (liquid, ut, mut excess) = advance_phase(
        &state.liquid,
        spec.diffusivity / (s * dxi).powi(2),
        |j| j as f64 * dxi * v / s / (2.0 * dxi),
        dt,
        spec.boundary.at(t_next),
        0.0,
    );
    let solid = match (&spec.second_phase, &state.solid) {
        (Some(p), Some(w)) => {
            let width = p.length - s;
            let m = w.len() - 1;
            let deta = 1.0 / m as f64;
            check_phase(width, m, p.diffusivity, v.abs(), dt)?;
            if !(s_next < p.length) {
                return Err(Error::FrontExit(format!("front reached the far wall at t = {t_next}")));
            }
            let (next, _, e) = advance_phase(
                w,
                p.diffusivity / (width * deta).powi(2),
                |i| v * (1.0 - i as f64 * deta) / width / (2.0 * deta),
                dt,
                0.0,
                p.temperature,
            );
            excess = excess.max(e);
            Some(next)
        }
        _ => None,
    };
    Ok(Advance { state: FrontState1D { time: t_next, front: s_next, liquid, solid }, velocity: v, ut, excess })
}

/// One lock-step update of the front and the temperatures.
pub fn step_stefan(spec: &StefanSpec1D, state: &FrontState1D, dt: f64) -> Result<FrontState1D> {
    Ok(advance(spec, state, dt)?.state)
}

/// Resamples mapped nodal values onto the cell centres of a physical 1D
/// grid: liquid on `[0, s]`, solid on `[s, L]` when given, zero otherwise.
pub fn to_physical(
    liquid: &[f64],
    front: f64,
    solid: Option<(&[f64], f64)>,
    grid: &Grid,
    time: f64,
) -> Result<TemperatureField> {
    if grid.dim() != 1 {
        return Err(Error::Shape("physical resampling needs a 1D grid".into()));
    }
    TemperatureField::from_fn(grid.clone(), time, |p| {
        let x = p[0];
        if x <= front {
            interpolate(liquid, (x / front).max(0.0))
        } else if let Some((w, length)) = solid {
            interpolate(w, ((x - front) / (length - front)).min(1.0))
        } else {
            0.0
        }
    })
}

/// Output of a run; `failure` holds the error that stopped it early.
#[derive(Debug)]
pub struct StefanRun {
    /// Liquid temperature on the mapped grid `xi in [0, 1]`.
    pub liquid: HeatTrajectory,
    /// Solid temperature on the mapped grid `eta in [0, 1]`.
    pub solid: Option<HeatTrajectory>,
    /// Front position at each snapshot.
    pub snapshot_fronts: Vec<f64>,
    pub front: FrontTrajectory,
    pub report: RunReport,
    pub final_state: FrontState1D,
    pub steps: usize,
    pub dt: f64,
    pub failure: Option<Error>,
    solid_length: Option<f64>,
}

impl StefanRun {
    /// Snapshot `k` resampled on a fixed physical grid.
    pub fn physical_snapshot(&self, k: usize, grid: &Grid) -> Result<TemperatureField> {
        let u = &self.liquid.snapshots()[k];
        let solid = match (&self.solid, self.solid_length) {
            (Some(traj), Some(l)) => Some((traj.snapshots()[k].values(), l)),
            _ => None,
        };
        to_physical(u.values(), self.snapshot_fronts[k], solid, grid, u.time())
    }

    /// Every snapshot resampled on a fixed physical grid.
    pub fn physical_trajectory(&self, grid: &Grid) -> Result<HeatTrajectory> {
        let snaps = (0..self.liquid.len()).map(|k| self.physical_snapshot(k, grid)).collect::<Result<Vec<_>>>()?;
        HeatTrajectory::new(self.liquid.dt(), snaps)
    }
}

/// Runs to `t_end`, stopping early on a fatal step error (kept in `failure`).
pub fn run_stefan(spec: &StefanSpec1D) -> Result<StefanRun> {
    let init = spec.initial_state()?;
    let b = init.front;
    let n = spec.cells;
    let span = spec.t_end - spec.t_start;
    let stride = (span / spec.max_step(b) / spec.snapshots as f64).ceil().max(1.0) as usize;
    let n_steps = stride * spec.snapshots;
    let dt = span / n_steps as f64;
    let scale = spec.scale(&init);
    let dxi = 1.0 / n as f64;

    let liquid_grid = Grid::vertex_aligned(&[0.0], &[1.0], &[n + 1])?;
    let solid_grid = match &spec.second_phase {
        Some(p) => Some(Grid::vertex_aligned(&[0.0], &[1.0], &[p.cells + 1])?),
        None => None,
    };
    let mut liquid_snaps = vec![TemperatureField::new(liquid_grid.clone(), init.time, init.liquid.clone())?];
    let mut solid_snaps = Vec::new();
    if let (Some(g), Some(w)) = (&solid_grid, &init.solid) {
        solid_snaps.push(TemperatureField::new(g.clone(), init.time, w.clone())?);
    }
    let mut snapshot_fronts = vec![b];

    let degenerate = init.liquid[0] > 0.0 && init.liquid[1..].iter().all(|v| *v == 0.0);
    let records = spec.front_records.max(1);
    let recorded = |i: usize| i == 0 || i == n_steps || (i * records) / n_steps > ((i - 1) * records) / n_steps;

    let mut front = FrontTrajectory::default();
    let mut state = init;
    let mut failure = None;
    let mut min_liquid = f64::INFINITY;
    let mut max_solid = f64::NEG_INFINITY;
    let mut max_excess: f64 = 0.0;
    let mut max_front_value: f64 = 0.0;
    let mut min_increment = f64::INFINITY;
    let mut ut_min = f64::INFINITY;
    let mut ut_violations = 0usize;
    let mut max_pe: f64 = 0.0;
    let mut snapshot_rates: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut steps = 0;

    'steps: for k in 0..n_steps {
        let plan: Vec<f64> = if k == 0 && degenerate { vec![dt / 10.0; 5].into_iter().chain([dt / 2.0]).collect() } else { vec![dt] };
        let mut first_rate = None;
        for (sub, h) in plan.into_iter().enumerate() {
            let adv = match advance(spec, &state, h) {
                Ok(a) => a,
                Err(e) => {
                    failure = Some(e);
                    break 'steps;
                }
            };
            if sub == 0 && recorded(k) {
                front.push(state.time, state.front, adv.velocity);
            }
            let s = state.front;
            let tol = 10.0 * ((s * dxi).powi(2) + h) * scale;
            for &r in &adv.ut[1..n] {
                ut_min = ut_min.min(r);
                if r < -tol {
                    ut_violations += 1;
                }
            }
            max_pe = max_pe.max(adv.velocity.abs() * s * dxi / (2.0 * spec.diffusivity));
            max_excess = max_excess.max(adv.excess);
            min_increment = min_increment.min(adv.state.front - s);
            if first_rate.is_none() {
                first_rate = Some((s, adv.ut.clone()));
            }
            state = adv.state;
        }
        state.time = if k + 1 == n_steps { spec.t_end } else { spec.t_start + (k + 1) as f64 * dt };
        steps = k + 1;
        min_liquid = state.liquid.iter().fold(min_liquid, |a, v| a.min(*v));
        max_front_value = max_front_value.max(state.liquid[n].abs());
        if let Some(w) = &state.solid {
            max_solid = w.iter().fold(max_solid, |a, v| a.max(*v));
        }
        if k % stride == 0 {
            snapshot_rates.push(first_rate.expect("at least one substep"));
        }
        if steps % stride == 0 {
            liquid_snaps.push(TemperatureField::new(liquid_grid.clone(), state.time, state.liquid.clone())?);
            if let (Some(g), Some(w)) = (&solid_grid, &state.solid) {
                solid_snaps.push(TemperatureField::new(g.clone(), state.time, w.clone())?);
            }
            snapshot_fronts.push(state.front);
        }
    }
    let final_velocity = front_velocity(spec, &state).unwrap_or(f64::NAN);
    if failure.is_some() || front.times.last() != Some(&state.time) {
        front.push(state.time, state.front, final_velocity);
    }

    let snap_dt = stride as f64 * dt;
    let liquid = HeatTrajectory::new(snap_dt, liquid_snaps)?;
    let solid = if solid_snaps.is_empty() { None } else { Some(HeatTrajectory::new(snap_dt, solid_snaps)?) };

    let mut report = RunReport::new("solve1d");
    let two_phase = spec.second_phase.is_some();
    let monotone = Diagnostic::at_least(if min_increment.is_finite() { min_increment } else { 0.0 }, -1e-12);
    report.add("front_monotone", if two_phase { monotone.soft() } else { monotone });
    report.add("liquid_nonnegative", Diagnostic::at_least(min_liquid, -1e-12 * scale));
    report.add("max_principle_excess", Diagnostic::at_most(max_excess, 1e-12 * scale));
    report.add("front_condition", Diagnostic::at_most(max_front_value, 0.0));
    report.add("cell_peclet", Diagnostic::at_most(max_pe, 1.0));
    if two_phase {
        report.add("solid_nonpositive", Diagnostic::at_most(max_solid, 1e-12 * scale));
    }
    report.add(
        "ut_violations",
        Diagnostic::at_most(ut_violations as f64, 0.0)
            .soft()
            .with_notes(format!("u_t >= -10 (h^2 + dt) scale checked at interior nodes; min u_t = {ut_min:e}")),
    );

    let continuity = continuity_series(&snapshot_rates, b, n);
    let slack = 10.0 * ((b * dxi).powi(2) + dt) * scale * b;
    let worst_drop = continuity.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
    report.add(
        "continuity_monotone",
        Diagnostic::at_most(worst_drop, slack).soft().with_notes("L1 distance of u_t from its initial value, increasing in t"),
    );
    report.add_series("continuity_l1", continuity);
    report.add_series("snapshot_times", liquid.times());
    report.add_series("snapshot_fronts", snapshot_fronts.clone());

    if let Some(sim) = spec.similarity_solution()? {
        let exact = sim.front(state.time);
        report.add(
            "similarity_front_error",
            Diagnostic::at_most((state.front - exact).abs() / exact, 0.01)
                .with_notes(format!("relative error against 2 lambda sqrt(D t), lambda = {:.12}", sim.lambda)),
        );
    }
    if let Some(e) = &failure {
        report.failure = Some(e.to_string());
    }

    Ok(StefanRun {
        liquid,
        solid,
        snapshot_fronts,
        front,
        report,
        final_state: state,
        steps,
        dt,
        failure,
        solid_length: spec.second_phase.as_ref().map(|p| p.length),
    })
}

/// Runs to `t_end`; a fatal step error is returned as the error.
pub fn solve_stefan(spec: &StefanSpec1D) -> Result<StefanRun> {
    let mut run = run_stefan(spec)?;
    match run.failure.take() {
        Some(e) => Err(e),
        None => Ok(run),
    }
}

/// `m(t_k) = int_0^b |u_t(x, t_k) - u_t(x, t_0)| dx` at each snapshot, with
/// `u_t` taken from the step leaving the snapshot.
fn continuity_series(rates: &[(f64, Vec<f64>)], b: f64, n: usize) -> Vec<f64> {
    let padded: Vec<(f64, Vec<f64>)> = rates
        .iter()
        .map(|(s, r)| {
            let mut r = r.clone();
            let m = r.len() - 1;
            r[0] = r[1];
            r[m] = r[m - 1];
            (*s, r)
        })
        .collect();
    let Some((s0, h)) = padded.first() else { return Vec::new() };
    let dx = b / n as f64;
    padded
        .iter()
        .map(|(s, r)| {
            (0..=n)
                .map(|i| {
                    let x = i as f64 * dx;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * (interpolate(r, (x / s).min(1.0)) - interpolate(h, x / s0)).abs()
                })
                .sum::<f64>()
                * dx
        })
        .collect()
}
