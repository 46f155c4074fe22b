use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Point, TemperatureField};

/// Whole-space heat solution `(4 pi t)^(-n/2) * int phi(xi) exp(-|x - xi|^2 / 4t) dxi`
/// by tensor-product trapezoid quadrature over the samples of `phi`.
///
/// `phi` is taken as zero outside its grid, so the grid must cover the
/// support of the initial data.
pub fn heat_kernel_solution(phi: &TemperatureField, x: &Point, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("heat kernel needs t > 0, got {t}")));
    }
    let grid = phi.grid();
    let n = grid.dim() as i32;
    let norm = (4.0 * PI * t).powf(-0.5 * n as f64);
    let inv4t = 1.0 / (4.0 * t);
    let sum: f64 = phi
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, &v)| {
            let c = grid.center(i);
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
            grid.trapezoid_weight(i) * v * (-r2 * inv4t).exp()
        })
        .sum();
    Ok(norm * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn gaussian(x: f64, variance: f64) -> f64 {
        (-x * x / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
    }

    #[test]
    fn unit_mass_in_one_and_two_dimensions() {
        let g = Grid::vertex_aligned(&[-12.0], &[12.0], &[481]).unwrap();
        let one = TemperatureField::from_fn(g, 0.0, |_| 1.0).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0] {
            let v = heat_kernel_solution(&one, &[0.3, 0.0, 0.0], t).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "t={t}: {v}");
        }
        let g2 = Grid::vertex_aligned(&[-10.0, -10.0], &[10.0, 10.0], &[201, 201]).unwrap();
        let one2 = TemperatureField::from_fn(g2, 0.0, |_| 1.0).unwrap();
        let v = heat_kernel_solution(&one2, &[0.0, 0.5, 0.0], 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn odd_data_gives_zero_at_centre() {
        let g = Grid::vertex_aligned(&[-8.0], &[8.0], &[321]).unwrap();
        let odd = TemperatureField::from_fn(g, 0.0, |p| p[0] * (-p[0] * p[0]).exp()).unwrap();
        assert!(heat_kernel_solution(&odd, &[0.0; 3], 0.7).unwrap().abs() < 1e-14);
    }

    #[test]
    fn gaussian_variances_add() {
        let s = 0.3;
        let g = Grid::vertex_aligned(&[-10.0], &[10.0], &[801]).unwrap();
        let phi = TemperatureField::from_fn(g, 0.0, |p| gaussian(p[0], 2.0 * s)).unwrap();
        for (x, t) in [(0.0, 0.2), (0.7, 0.5), (-1.3, 1.0)] {
            let v = heat_kernel_solution(&phi, &[x, 0.0, 0.0], t).unwrap();
            let exact = gaussian(x, 2.0 * (s + t));
            assert!((v - exact).abs() < 1e-6, "x={x} t={t}: {v} vs {exact}");
        }
    }

    #[test]
    fn rejects_non_positive_time() {
        let g = Grid::cells(&[0.0], &[1.0], &[8]).unwrap();
        let phi = TemperatureField::zeros(g, 0.0);
        assert!(heat_kernel_solution(&phi, &[0.0; 3], 0.0).is_err());
        assert!(heat_kernel_solution(&phi, &[0.0; 3], -1.0).is_err());
    }
}
