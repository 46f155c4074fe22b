//! Discrete form of `int_Omega int_0^T (u_t - Laplacian u) dx dt`.
//!
//! Per time interval the `u_t` part integrates exactly to
//! `u^{n+1} - u^n`; the Laplacian part uses the central stencil and the
//! trapezoid rule in time. Space is integrated with the trapezoid rule
//! over the interior cells, where the stencil is defined.

use super::explicit::HeatTrajectory;
use crate::error::{Error, Result};
use crate::grid::{discrete_laplacian, Grid, TemperatureField};

/// Streaming accumulator for the conservation residual, so long runs do
/// not need to keep every snapshot.
#[derive(Clone, Debug)]
pub struct ConservationResidual {
    weights: Vec<(usize, f64)>,
    previous: Option<(TemperatureField, Vec<f64>)>,
    total: f64,
    levels: usize,
}

impl ConservationResidual {
    pub fn new(grid: &Grid) -> Self {
        Self { weights: interior_trapezoid_weights(grid), previous: None, total: 0.0, levels: 0 }
    }

    pub fn push(&mut self, u: &TemperatureField) -> Result<()> {
        let lap = discrete_laplacian(u)?.field.into_values();
        if let Some((prev, prev_lap)) = &self.previous {
            if !prev.grid().same_shape(u.grid()) {
                return Err(Error::Shape("snapshot changes grid".into()));
            }
            let dt = u.time() - prev.time();
            if dt <= 0.0 {
                return Err(Error::InvalidArgument("snapshot times must increase".into()));
            }
            let (a, b) = (prev.values(), u.values());
            self.total += self
                .weights
                .iter()
                .map(|&(i, w)| w * ((b[i] - a[i]) - 0.5 * dt * (prev_lap[i] + lap[i])))
                .sum::<f64>();
        }
        self.previous = Some((u.clone(), lap));
        self.levels += 1;
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn value(&self) -> Result<f64> {
        if self.levels < 2 {
            return Err(Error::InvalidArgument(format!(
                "conservation residual needs two snapshots, have {}",
                self.levels
            )));
        }
        Ok(self.total)
    }
}

pub fn conservation_residual(traj: &HeatTrajectory) -> Result<f64> {
    let mut acc = ConservationResidual::new(traj.grid());
    for s in traj.snapshots() {
        acc.push(s)?;
    }
    acc.value()
}

/// Trapezoid weights over the interior box (indices `1..n-1` per axis).
fn interior_trapezoid_weights(grid: &Grid) -> Vec<(usize, f64)> {
    (0..grid.len())
        .filter(|&i| !grid.is_boundary(i))
        .map(|i| {
            let ijk = grid.unravel(i);
            let w = grid
                .axes()
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let h = a.spacing();
                    if ijk[k] == 1 || ijk[k] + 2 == a.count {
                        0.5 * h
                    } else {
                        h
                    }
                })
                .product();
            (i, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Point;
    use crate::heat::{solve_dirichlet, solve_dirichlet_with, OperatorCoefficients};
    use std::f64::consts::PI;

    fn zero(_: &Point, _: f64) -> f64 {
        0.0
    }

    #[test]
    fn zero_and_affine_trajectories_conserve_exactly() {
        let g = Grid::vertex_aligned(&[0.0], &[1.0], &[21]).unwrap();
        let dt = 0.4 * g.spacing(0).powi(2);
        let u0 = TemperatureField::zeros(g.clone(), 0.0);
        let traj = solve_dirichlet(&OperatorCoefficients::laplacian(), &u0, &zero, 0.01, dt).unwrap();
        assert_eq!(conservation_residual(&traj).unwrap(), 0.0);

        let affine = |p: &Point, _t: f64| 1.0 - 0.5 * p[0];
        let a0 = TemperatureField::from_fn(g, 0.0, |p| affine(p, 0.0)).unwrap();
        let traj = solve_dirichlet(&OperatorCoefficients::laplacian(), &a0, &affine, 0.01, dt).unwrap();
        assert!(conservation_residual(&traj).unwrap().abs() < 1e-14);
    }

    #[test]
    fn single_snapshot_rejected() {
        let g = Grid::cells(&[0.0], &[1.0], &[8]).unwrap();
        let traj = HeatTrajectory::new(0.1, vec![TemperatureField::zeros(g, 0.0)]).unwrap();
        assert!(conservation_residual(&traj).is_err());
    }

    #[test]
    fn residual_shrinks_fourfold_under_refinement() {
        let residual = |cells: usize| {
            let g = Grid::vertex_aligned(&[0.0], &[1.0], &[cells + 1]).unwrap();
            let dt = 0.4 * g.spacing(0).powi(2);
            let u0 = TemperatureField::from_fn(g.clone(), 0.0, |p| (PI * p[0]).sin()).unwrap();
            let mut acc = ConservationResidual::new(&g);
            solve_dirichlet_with(&OperatorCoefficients::laplacian(), &u0, &zero, 0.1, dt, |u| acc.push(u)).unwrap();
            acc.value().unwrap()
        };
        let coarse = residual(50);
        let fine = residual(100);
        assert!(coarse.abs() / fine.abs() >= 3.5, "{coarse} -> {fine}");
    }
}
