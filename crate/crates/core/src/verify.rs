//! Diagnostics for parabolic comparison arguments: barrier fields and
//! their heat residual, maximum-principle audits, initial-continuity and
//! positivity-spread metrics, and subcaloric orderings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{discrete_laplacian, neighborhood_radius, positivity_set, CellMask, MaskedField, ParabolicCylinder, Point};
use crate::heat::{caloric_replacement, radial_average, HeatTrajectory, SpaceTimeData};

/// Centre and apex time of the barrier
/// `v = u - c (|x - x_m|^2 + (t_m - t))` with `c = 1/(8n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub center: Point,
    pub time: f64,
    pub dim: usize,
}

impl BarrierParams {
    pub fn new(center: Point, time: f64, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("barrier dimension {dim} is not 1, 2 or 3")));
        }
        if !(time > 0.0 && time.is_finite()) {
            return Err(Error::InvalidArgument(format!("barrier time {time} must be positive")));
        }
        Ok(Self { center, time, dim })
    }

    pub fn c(&self) -> f64 {
        1.0 / (8.0 * self.dim as f64)
    }

    /// The quadratic part `c (|x - x_m|^2 + (t_m - t))`.
    pub fn paraboloid(&self, x: &Point, t: f64) -> f64 {
        let r2: f64 = (0..self.dim).map(|k| (x[k] - self.center[k]).powi(2)).sum();
        self.c() * (r2 + (self.time - t))
    }

    /// `Lap v - v_t` of the barrier over a caloric `u`: `-(2n + 1) c`.
    /// Exact for the central/forward stencil as well, quadratics being
    /// reproduced without truncation.
    pub fn residual_over_caloric(&self) -> f64 {
        -(2.0 * self.dim as f64 + 1.0) * self.c()
    }
}

/// Samples `v = u - c (|x - x_m|^2 + (t_m - t))` on the trajectory's grid
/// and levels.
pub fn barrier_field(u: &HeatTrajectory, p: &BarrierParams) -> Result<HeatTrajectory> {
    let grid = u.grid();
    if grid.dim() != p.dim {
        return Err(Error::Shape(format!("barrier in {}D over a {}D trajectory", p.dim, grid.dim())));
    }
    let (t0, t1) = (u.first().time(), u.last().time());
    if p.time < t0 - 1e-12 * t1.abs() || p.time > t1 + 1e-12 * t1.abs() {
        return Err(Error::InvalidArgument(format!("barrier time {} outside [{t0}, {t1}]", p.time)));
    }
    let snaps = u
        .snapshots()
        .iter()
        .map(|s| {
            let t = s.time();
            let v = s.values().iter().enumerate().map(|(i, &ui)| ui - p.paraboloid(&grid.center(i), t)).collect();
            s.with_values(t, v)
        })
        .collect::<Result<Vec<_>>>()?;
    HeatTrajectory::new(u.dt(), snaps)
}

/// `Lap v - v_t` per interior cell at every level but the last, with the
/// central Laplacian at level `k` and the forward difference from `k` to
/// `k + 1`.
pub fn heat_residual_field(v: &HeatTrajectory) -> Result<Vec<MaskedField>> {
    if v.len() < 2 {
        return Err(Error::InvalidArgument("residual needs two time levels".into()));
    }
    v.snapshots()
        .windows(2)
        .map(|pair| {
            let dt = pair[1].time() - pair[0].time();
            let mut lap = discrete_laplacian(&pair[0])?;
            let (now, next) = (pair[0].values(), pair[1].values());
            let vals: Vec<f64> = lap
                .field
                .values()
                .iter()
                .enumerate()
                .map(|(i, &l)| if lap.valid.get(i) { l - (next[i] - now[i]) / dt } else { 0.0 })
                .collect();
            lap.field = lap.field.with_values(pair[0].time(), vals)?;
            Ok(lap)
        })
        .collect()
}

/// `(min, max)` over every valid cell of every level.
pub fn residual_extent(fields: &[MaskedField]) -> (f64, f64) {
    fields.iter().flat_map(|f| f.valid_values()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| {
        (lo.min(v), hi.max(v))
    })
}

/// Where the space-time maximum over a region sits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleAudit {
    pub max_value: f64,
    pub max_cell: usize,
    pub max_level: usize,
    /// Largest value on the parabolic boundary (first level plus lateral cells).
    pub boundary_max: f64,
    /// `max(0, interior max - boundary max)`.
    pub violation: f64,
    pub scale: f64,
    /// Violation within `1e-12 * scale`.
    pub on_parabolic_boundary: bool,
}

/// Compares the maximum over `region` at levels after the first with the
/// maximum over its parabolic boundary: the whole first level, and at
/// later levels the region cells on the outer faces or next to a cell
/// outside the region.
pub fn max_principle_audit(traj: &HeatTrajectory, region: &CellMask) -> Result<MaxPrincipleAudit> {
    let grid = traj.grid();
    if !region.grid().same_shape(grid) {
        return Err(Error::Shape("audit region does not conform to the trajectory grid".into()));
    }
    if region.is_none() {
        return Err(Error::InvalidArgument("audit region is empty".into()));
    }
    let lateral: Vec<bool> = (0..grid.len())
        .map(|i| region.get(i) && (grid.is_boundary(i) || grid.face_neighbors(i).any(|j| !region.get(j))))
        .collect();
    let mut boundary_max = f64::NEG_INFINITY;
    let mut inner_max = f64::NEG_INFINITY;
    let mut best = (f64::NEG_INFINITY, 0, 0);
    let mut scale: f64 = 1.0;
    for (level, snap) in traj.snapshots().iter().enumerate() {
        for i in region.indices() {
            let v = snap.values()[i];
            scale = scale.max(v.abs());
            let on_boundary = level == 0 || lateral[i];
            if on_boundary {
                boundary_max = boundary_max.max(v);
            } else {
                inner_max = inner_max.max(v);
            }
            // Ties go to the earliest sample, which is on the boundary first.
            if v > best.0 {
                best = (v, i, level);
            }
        }
    }
    let violation = (inner_max - boundary_max).max(0.0);
    Ok(MaxPrincipleAudit {
        max_value: best.0,
        max_cell: best.1,
        max_level: best.2,
        boundary_max,
        violation,
        scale,
        on_parabolic_boundary: violation <= 1e-12 * scale,
    })
}

/// `m(t_k) = int |u_t(x, t_k) - h(x)| dx` over `mask`, with the forward
/// difference from level `k` to `k + 1` and trapezoid weights in space.
/// One value per level except the last.
pub fn initial_continuity_metric(traj: &HeatTrajectory, h: &[f64], mask: &CellMask) -> Result<Vec<(f64, f64)>> {
    let grid = traj.grid();
    if mask.is_none() {
        return Err(Error::InvalidArgument("continuity mask is empty".into()));
    }
    if !mask.grid().same_shape(grid) || h.len() != grid.len() {
        return Err(Error::Shape("continuity data does not conform to the trajectory grid".into()));
    }
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("continuity metric needs three time levels".into()));
    }
    let weights: Vec<(usize, f64)> = mask.indices().map(|i| (i, grid.trapezoid_weight(i))).collect();
    Ok(traj
        .snapshots()
        .windows(2)
        .map(|pair| {
            let dt = pair[1].time() - pair[0].time();
            let (a, b) = (pair[0].values(), pair[1].values());
            let m = weights.iter().map(|&(i, w)| w * ((b[i] - a[i]) / dt - h[i]).abs()).sum();
            (pair[0].time(), m)
        })
        .collect())
}

/// Largest amount by which `m` drops as `t` increases, beyond `slack`.
/// Zero when `m` is non-decreasing in `t` up to the slack.
pub fn continuity_violation(series: &[(f64, f64)], slack: f64) -> f64 {
    series.windows(2).map(|w| (w[0].1 - w[1].1 - slack).max(0.0)).fold(0.0, f64::max)
}

/// `delta(t)`: radius of the smallest neighbourhood of `reference`
/// containing the positivity set `{u(., t) > 0}`, at the snapshot nearest
/// each requested time.
pub fn delta_of_t(traj: &HeatTrajectory, reference: &CellMask, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    if reference.is_none() {
        return Err(Error::InvalidArgument("reference set is empty".into()));
    }
    let full = CellMask::full(traj.grid());
    let (t0, dt) = (traj.first().time(), traj.dt());
    times
        .iter()
        .map(|&t| {
            let k = ((t - t0) / dt).round();
            if k < 0.0 || k as usize >= traj.len() {
                return Err(Error::InvalidArgument(format!("time {t} outside the trajectory")));
            }
            let snap = &traj.snapshots()[k as usize];
            let pos = positivity_set(snap, &full)?;
            Ok((snap.time(), neighborhood_radius(&pos, reference)?))
        })
        .collect()
}

/// Signed gap `z - w` between the caloric replacement `z` of `w` and `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcaloricOrdering {
    /// Extremes of `z - w` over interior cells at the levels after the bottom.
    pub min_gap: f64,
    pub max_gap: f64,
    /// Smallest discrete `Lap w - w_t` over interior cells and levels.
    pub min_defect: f64,
    pub samples: usize,
}

impl SubcaloricOrdering {
    /// `1` if `z > w` everywhere sampled, `-1` if `z < w`, `0` otherwise.
    pub fn sign(&self) -> i8 {
        if self.min_gap > 0.0 {
            1
        } else if self.max_gap < 0.0 {
            -1
        } else {
            0
        }
    }

    /// `z <= w` at every sample.
    pub fn replacement_below(&self) -> bool {
        self.max_gap <= 0.0
    }
}

/// Measures the ordering of `w` and its caloric replacement on `cyl`,
/// alongside the discrete heat defect of `w` that drives it.
pub fn subcaloric_ordering(w: &impl SpaceTimeData, cyl: &ParabolicCylinder) -> Result<SubcaloricOrdering> {
    let rep = caloric_replacement(w, cyl)?;
    let grid = w.grid();
    let st = grid.strides();
    let inv_h2: Vec<f64> = grid.axes().iter().map(|a| 1.0 / (a.spacing() * a.spacing())).collect();
    let cells: Vec<usize> = rep.interior.indices().collect();
    if cells.is_empty() {
        return Err(Error::Underresolved("cylinder has no interior cells".into()));
    }
    let mut out = SubcaloricOrdering {
        min_gap: f64::INFINITY,
        max_gap: f64::NEG_INFINITY,
        min_defect: f64::INFINITY,
        samples: 0,
    };
    let levels = rep.trajectory.len();
    for step in 0..levels {
        let level = rep.start_level + step;
        if step + 1 < levels {
            let dt = w.time(level + 1) - w.time(level);
            for &i in &cells {
                let lap: f64 = (0..grid.dim())
                    .map(|k| (w.value(i + st[k], level) - 2.0 * w.value(i, level) + w.value(i - st[k], level)) * inv_h2[k])
                    .sum();
                out.min_defect = out.min_defect.min(lap - (w.value(i, level + 1) - w.value(i, level)) / dt);
            }
        }
        if step == 0 {
            continue;
        }
        let z = rep.trajectory.snapshots()[step].values();
        for &i in &cells {
            let gap = z[i] - w.value(i, level);
            out.min_gap = out.min_gap.min(gap);
            out.max_gap = out.max_gap.max(gap);
            out.samples += 1;
        }
    }
    Ok(out)
}

/// `(R, w_R)` for each radius, `w_R` being the radial average of caloric
/// replacements over `[R, 2R]` with `m` radii.
pub fn radial_ordering(
    w: &(impl SpaceTimeData + Sync),
    x0: &Point,
    t0: f64,
    radii: &[f64],
    m: usize,
) -> Result<Vec<(f64, f64)>> {
    radii.iter().map(|&r| Ok((r, radial_average(w, x0, t0, r, m)?))).collect()
}

/// `true` when the second entries never decrease along the slice.
pub fn is_nondecreasing(series: &[(f64, f64)]) -> bool {
    series.windows(2).all(|w| w[1].1 >= w[0].1)
}
