use crate::error::{Error, Result};
use crate::grid::{Grid, TemperatureField};

/// Free boundary `z = rho(x, y)` sampled at the cell centres of a 2D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFront {
    heights: TemperatureField,
}

impl GraphFront {
    pub fn new(grid: Grid, time: f64, heights: Vec<f64>) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Shape(format!("graph front needs a 2D grid, got {}D", grid.dim())));
        }
        Ok(Self { heights: TemperatureField::new(grid, time, heights)? })
    }

    pub fn from_fn(grid: Grid, time: f64, rho: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|c| {
            let p = grid.center(c);
            rho(p[0], p[1])
        });
        Self::new(grid.clone(), time, values.collect())
    }

    pub fn grid(&self) -> &Grid {
        self.heights.grid()
    }

    pub fn time(&self) -> f64 {
        self.heights.time()
    }

    pub fn heights(&self) -> &[f64] {
        self.heights.values()
    }

    pub fn as_field(&self) -> &TemperatureField {
        &self.heights
    }

    pub(crate) fn with_heights(&self, time: f64, heights: Vec<f64>) -> Result<Self> {
        Ok(Self { heights: self.heights.with_values(time, heights)? })
    }

    /// `(rho_x, rho_y)` per cell: central differences, one-sided at the edges.
    pub fn slopes(&self) -> Vec<[f64; 2]> {
        let shape = self.grid().shape();
        let (nx, ny) = (shape[0], shape[1]);
        let (hx, hy) = (self.grid().spacing(0), self.grid().spacing(1));
        let r = self.heights();
        (0..nx * ny)
            .map(|c| {
                let (i, j) = (c / ny, c % ny);
                [
                    edge_difference(|a| r[a * ny + j], i, nx, hx),
                    edge_difference(|b| r[i * ny + b], j, ny, hy),
                ]
            })
            .collect()
    }

    /// Discrete Lipschitz constant `max(|rho_x|, |rho_y|)`.
    pub fn lipschitz(&self) -> f64 {
        self.slopes().iter().fold(0.0f64, |m, s| m.max(s[0].abs()).max(s[1].abs()))
    }

    pub fn min_height(&self) -> f64 {
        self.heights.min()
    }

    pub fn max_height(&self) -> f64 {
        self.heights.max()
    }
}

/// Central difference of `f` at index `i` of `0..n`, one-sided at the ends.
fn edge_difference(f: impl Fn(usize) -> f64, i: usize, n: usize, h: f64) -> f64 {
    if i == 0 {
        (f(1) - f(0)) / h
    } else if i + 1 == n {
        (f(n - 1) - f(n - 2)) / h
    } else {
        (f(i + 1) - f(i - 1)) / (2.0 * h)
    }
}

/// `n = (-rho_x, -rho_y, 1) / sqrt(1 + rho_x^2 + rho_y^2)`, pointing out of
/// the liquid below the graph.
pub fn front_normal(front: &GraphFront) -> Vec<[f64; 3]> {
    front.slopes().into_iter().map(normal_from_slope).collect()
}

pub(crate) fn normal_from_slope(s: [f64; 2]) -> [f64; 3] {
    let m = (1.0 + s[0] * s[0] + s[1] * s[1]).sqrt();
    [-s[0] / m, -s[1] / m, 1.0 / m]
}
