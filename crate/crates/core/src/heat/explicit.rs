//! Forward-Euler time stepping of `u_t = L u` with Dirichlet data on the
//! outer cells of the grid.

use super::coefficients::OperatorCoefficients;
use crate::error::{Error, Result};
use crate::grid::{check_finite, discrete_laplacian, CellMask, Grid, MaskedField, Point, TemperatureField};

/// Snapshots of one field at uniformly spaced times.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatTrajectory {
    dt: f64,
    snapshots: Vec<TemperatureField>,
}

impl HeatTrajectory {
    pub fn new(dt: f64, snapshots: Vec<TemperatureField>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("trajectory step {dt} must be positive")));
        }
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidArgument("trajectory needs at least one snapshot".into()))?;
        for (k, pair) in snapshots.windows(2).enumerate() {
            if !pair[1].grid().same_shape(first.grid()) {
                return Err(Error::Shape(format!("snapshot {} changes grid", k + 1)));
            }
            let gap = pair[1].time() - pair[0].time();
            if gap <= 0.0 || (gap - dt).abs() > 1e-9 * dt.max(pair[1].time()) {
                return Err(Error::InvalidArgument(format!(
                    "snapshot {} is {gap:e} after its predecessor, expected {dt:e}",
                    k + 1
                )));
            }
        }
        Ok(Self { dt, snapshots })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[TemperatureField] {
        &self.snapshots
    }

    pub fn first(&self) -> &TemperatureField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &TemperatureField {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(TemperatureField::time).collect()
    }
}

/// Applies the operator with second-order central differences on interior
/// cells; outer cells are flagged invalid.
pub fn apply_operator(coeffs: &OperatorCoefficients, f: &TemperatureField) -> Result<MaskedField> {
    check_finite(f.values())?;
    if let Some(k) = coeffs.as_isotropic() {
        if k <= 0.0 {
            return Err(Error::Indefinite { point: [k, 0.0, 0.0] });
        }
        let mut lap = discrete_laplacian(f)?;
        if k != 1.0 {
            let scaled = lap.field.values().iter().map(|v| k * v).collect();
            lap.field = lap.field.with_values(f.time(), scaled)?;
        }
        return Ok(lap);
    }

    let grid = f.grid();
    let n = grid.dim();
    let st = grid.strides();
    let h: Vec<f64> = grid.axes().iter().map(|a| a.spacing()).collect();
    let t = f.time();
    let u = f.values();
    let valid = CellMask::interior(grid);
    let mut out = vec![0.0; u.len()];
    for i in valid.indices() {
        let p = grid.center(i);
        let a = coeffs.checked_a(&p, t, n)?;
        let b = coeffs.b(&p, t);
        let mut acc = coeffs.c(&p, t) * u[i];
        for j in 0..n {
            let (up, dn) = (u[i + st[j]], u[i - st[j]]);
            acc += a[j][j] * (up - 2.0 * u[i] + dn) / (h[j] * h[j]);
            acc += b[j] * (up - dn) / (2.0 * h[j]);
            for k in (j + 1)..n {
                if a[j][k] != 0.0 {
                    let cross = u[i + st[j] + st[k]] + u[i - st[j] - st[k]]
                        - u[i + st[j] - st[k]]
                        - u[i - st[j] + st[k]];
                    acc += 2.0 * a[j][k] * cross / (4.0 * h[j] * h[k]);
                }
            }
        }
        if !acc.is_finite() {
            return Err(Error::NonFinite { index: i, value: acc });
        }
        out[i] = acc;
    }
    Ok(MaskedField { field: f.with_values(t, out)?, valid })
}

/// One forward-Euler step. Interior cells take `u + dt L u`; outer cells
/// take the boundary data evaluated at `t + dt`.
pub fn step_explicit<B>(coeffs: &OperatorCoefficients, u: &TemperatureField, dt: f64, boundary: &B) -> Result<TemperatureField>
where
    B: Fn(&Point, f64) -> f64 + ?Sized,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let limit = coeffs.stability_limit(u.grid(), u.time())?;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Unstable { dt, limit });
    }
    let lu = apply_operator(coeffs, u)?;
    let grid = u.grid();
    let t_next = u.time() + dt;
    let l = lu.field.values();
    let next = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if lu.valid.get(i) { v + dt * l[i] } else { boundary(&grid.center(i), t_next) })
        .collect();
    u.with_values(t_next, next)
}

/// Number of uniform steps used to cover `[0, horizon]`: `ceil(horizon / dt)`,
/// with ratios within rounding of an integer taken as that integer.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    let ratio = horizon / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        (nearest as usize).max(1)
    } else {
        (ratio.ceil() as usize).max(1)
    }
}

/// Marches `ceil(horizon / dt)` steps, handing every level (initial
/// included) to `observe`. Returns the final field.
pub fn solve_dirichlet_with<B, O>(
    coeffs: &OperatorCoefficients,
    initial: &TemperatureField,
    boundary: &B,
    horizon: f64,
    dt: f64,
    mut observe: O,
) -> Result<TemperatureField>
where
    B: Fn(&Point, f64) -> f64 + ?Sized,
    O: FnMut(&TemperatureField) -> Result<()>,
{
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let steps = step_count(horizon, dt);
    observe(initial)?;
    let mut u = initial.clone();
    for _ in 0..steps {
        u = step_explicit(coeffs, &u, dt, boundary)?;
        observe(&u)?;
    }
    Ok(u)
}

/// Full trajectory of `ceil(horizon / dt) + 1` snapshots.
pub fn solve_dirichlet<B>(
    coeffs: &OperatorCoefficients,
    initial: &TemperatureField,
    boundary: &B,
    horizon: f64,
    dt: f64,
) -> Result<HeatTrajectory>
where
    B: Fn(&Point, f64) -> f64 + ?Sized,
{
    let mut snapshots = Vec::with_capacity(step_count(horizon, dt) + 1);
    solve_dirichlet_with(coeffs, initial, boundary, horizon, dt, |u| {
        snapshots.push(u.clone());
        Ok(())
    })?;
    HeatTrajectory::new(dt, snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_nodes(n: usize) -> Grid {
        Grid::vertex_aligned(&[0.0], &[1.0], &[n]).unwrap()
    }

    fn zero(_: &Point, _: f64) -> f64 {
        0.0
    }

    #[test]
    fn operator_reduces_to_laplacian() {
        let g = Grid::cells(&[0.0, 0.0], &[1.0, 1.0], &[9, 7]).unwrap();
        let f = TemperatureField::from_fn(g, 0.0, |p| (3.0 * p[0]).sin() * (2.0 * p[1]).cos()).unwrap();
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let general = apply_operator(&OperatorCoefficients::constant(id, [0.0; 3], 0.0), &f).unwrap();
        let lap = discrete_laplacian(&f).unwrap();
        assert_eq!(general.valid, lap.valid);
        for (i, v) in lap.valid_values() {
            assert!((general.field.values()[i] - v).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_examples() {
        let g = Grid::cells(&[0.0], &[1.0], &[20]).unwrap();
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let five = TemperatureField::from_fn(g.clone(), 0.0, |_| 5.0).unwrap();
        let op = OperatorCoefficients::constant(id, [0.0; 3], 1.0);
        for (_, v) in apply_operator(&op, &five).unwrap().valid_values() {
            assert_eq!(v, 5.0);
        }
        let sq = TemperatureField::from_fn(g, 0.0, |p| p[0] * p[0]).unwrap();
        let two = OperatorCoefficients::constant([[2.0, 0.0, 0.0], [0.0; 3], [0.0; 3]], [0.0; 3], 0.0);
        for (_, v) in apply_operator(&two, &sq).unwrap().valid_values() {
            assert!((v - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mixed_derivative_exact_on_xy() {
        let g = Grid::cells(&[0.0, 0.0], &[1.0, 2.0], &[8, 10]).unwrap();
        let f = TemperatureField::from_fn(g, 0.0, |p| p[0] * p[1] + p[0] * p[0]).unwrap();
        let a = [[1.0, 0.25, 0.0], [0.25, 1.0, 0.0], [0.0; 3]];
        let op = OperatorCoefficients::constant(a, [0.5, -1.0, 0.0], 0.0);
        let out = apply_operator(&op, &f).unwrap();
        for (i, v) in out.valid_values() {
            let p = out.field.grid().center(i);
            // a_xx * 2 + 2 a_xy * 1 + b_x (y + 2x) + b_y x
            let exact = 2.0 + 0.5 + 0.5 * (p[1] + 2.0 * p[0]) - p[0];
            assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
        }
    }

    #[test]
    fn indefinite_diffusion_rejected() {
        let g = Grid::cells(&[0.0, 0.0], &[1.0, 1.0], &[6, 6]).unwrap();
        let f = TemperatureField::zeros(g, 0.0);
        let op = OperatorCoefficients::with_diffusion(|p, _| {
            let s = if p[0] > 0.5 { -1.0 } else { 1.0 };
            [[1.0, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, 1.0]]
        });
        assert!(matches!(apply_operator(&op, &f), Err(Error::Indefinite { .. })));
    }

    #[test]
    fn zero_stays_zero() {
        let g = unit_nodes(21);
        let u = TemperatureField::zeros(g.clone(), 0.0);
        let dt = 0.4 * g.spacing(0).powi(2);
        let next = step_explicit(&OperatorCoefficients::laplacian(), &u, dt, &zero).unwrap();
        assert!(next.values().iter().all(|&v| v == 0.0));
        assert!((next.time() - dt).abs() < 1e-18);
    }

    #[test]
    fn sine_mode_decays_by_discrete_factor() {
        let g = unit_nodes(101);
        let h = g.spacing(0);
        let dt = 0.4 * h * h;
        let u = TemperatureField::from_fn(g, 0.0, |p| (PI * p[0]).sin()).unwrap();
        let next = step_explicit(&OperatorCoefficients::laplacian(), &u, dt, &zero).unwrap();
        let ratio = next.sup_norm() / u.sup_norm();
        let discrete = 1.0 - 4.0 * dt / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((ratio - discrete).abs() < 1e-12);
        let continuum = (-PI * PI * dt).exp();
        assert!((ratio - continuum).abs() <= 10.0 * h * h);
    }

    #[test]
    fn affine_state_is_steady() {
        let g = Grid::vertex_aligned(&[0.0, 0.0], &[1.0, 1.0], &[9, 9]).unwrap();
        let affine = |p: &Point, _t: f64| 0.25 + 2.0 * p[0] - p[1];
        let u = TemperatureField::from_fn(g.clone(), 0.0, |p| affine(p, 0.0)).unwrap();
        let dt = 0.2 * g.spacing(0).powi(2);
        let next = step_explicit(&OperatorCoefficients::laplacian(), &u, dt, &affine).unwrap();
        for (a, b) in next.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let traj = solve_dirichlet(&OperatorCoefficients::laplacian(), &u, &affine, 50.0 * dt, dt).unwrap();
        assert_eq!(traj.len(), 51);
        for s in traj.snapshots() {
            for (a, b) in s.values().iter().zip(u.values()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn unstable_step_rejected_with_limit() {
        let g = unit_nodes(11);
        let u = TemperatureField::zeros(g, 0.0);
        match step_explicit(&OperatorCoefficients::laplacian(), &u, 0.01, &zero) {
            Err(Error::Unstable { limit, .. }) => assert!((limit - 0.005).abs() < 1e-15),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn short_horizon_takes_one_step() {
        let g = unit_nodes(11);
        let u = TemperatureField::zeros(g, 0.0);
        let traj = solve_dirichlet(&OperatorCoefficients::laplacian(), &u, &zero, 1e-4, 1e-3).unwrap();
        assert_eq!(traj.len(), 2);
    }

    #[test]
    fn step_count_tolerates_rounding() {
        assert_eq!(step_count(0.1, 1e-4), 1000);
        assert_eq!(step_count(0.3, 0.1), 3);
        assert_eq!(step_count(0.35, 0.1), 4);
    }

    #[test]
    fn sine_decay_converges_at_second_order_in_space() {
        let errs: Vec<f64> = [20usize, 40, 80]
            .iter()
            .map(|&cells| {
                let g = unit_nodes(cells + 1);
                let h = g.spacing(0);
                let dt = 0.25 * h * h;
                let u0 = TemperatureField::from_fn(g.clone(), 0.0, |p| (PI * p[0]).sin()).unwrap();
                let end = solve_dirichlet_with(&OperatorCoefficients::laplacian(), &u0, &zero, 0.1, dt, |_| Ok(())).unwrap();
                (0..g.len())
                    .map(|i| {
                        let x = g.center(i)[0];
                        (end.values()[i] - (-PI * PI * end.time()).exp() * (PI * x).sin()).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9, "order {order} from {errs:?}");
        }
    }
}
