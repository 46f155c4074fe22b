use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

pub type Matrix3 = [[f64; 3]; 3];

type MatrixFn = dyn Fn(&Point, f64) -> Matrix3 + Send + Sync;
type VectorFn = dyn Fn(&Point, f64) -> [f64; 3] + Send + Sync;
type ScalarFn = dyn Fn(&Point, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Diffusion {
    /// `k` times the identity.
    Isotropic(f64),
    Field(Arc<MatrixFn>),
}

/// Coefficients of the second-order operator
/// `L f = sum a_jk d_j d_k f + sum b_j d_j f + c f`.
///
/// `a` must be symmetric and positive definite wherever it is sampled.
#[derive(Clone)]
pub struct OperatorCoefficients {
    diffusion: Diffusion,
    drift: Option<Arc<VectorFn>>,
    reaction: Option<Arc<ScalarFn>>,
}

impl fmt::Debug for OperatorCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match &self.diffusion {
            Diffusion::Isotropic(k) => format!("{k} * I"),
            Diffusion::Field(_) => "fn".to_string(),
        };
        f.debug_struct("OperatorCoefficients")
            .field("a", &a)
            .field("b", &self.drift.is_some())
            .field("c", &self.reaction.is_some())
            .finish()
    }
}

impl OperatorCoefficients {
    /// The plain Laplacian.
    pub fn laplacian() -> Self {
        Self::isotropic(1.0)
    }

    /// `k` times the Laplacian.
    pub fn isotropic(k: f64) -> Self {
        Self { diffusion: Diffusion::Isotropic(k), drift: None, reaction: None }
    }

    pub fn with_diffusion(a: impl Fn(&Point, f64) -> Matrix3 + Send + Sync + 'static) -> Self {
        Self { diffusion: Diffusion::Field(Arc::new(a)), drift: None, reaction: None }
    }

    pub fn drift(mut self, b: impl Fn(&Point, f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        self.drift = Some(Arc::new(b));
        self
    }

    pub fn reaction(mut self, c: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.reaction = Some(Arc::new(c));
        self
    }

    /// Constant-coefficient operator.
    pub fn constant(a: Matrix3, b: [f64; 3], c: f64) -> Self {
        let mut op = Self::with_diffusion(move |_, _| a);
        if b.iter().any(|v| *v != 0.0) {
            op = op.drift(move |_, _| b);
        }
        if c != 0.0 {
            op = op.reaction(move |_, _| c);
        }
        op
    }

    /// Isotropic diffusivity with neither drift nor reaction.
    pub fn as_isotropic(&self) -> Option<f64> {
        match (&self.diffusion, &self.drift, &self.reaction) {
            (Diffusion::Isotropic(k), None, None) => Some(*k),
            _ => None,
        }
    }

    pub fn a(&self, x: &Point, t: f64) -> Matrix3 {
        match &self.diffusion {
            Diffusion::Isotropic(k) => [[*k, 0.0, 0.0], [0.0, *k, 0.0], [0.0, 0.0, *k]],
            Diffusion::Field(f) => f(x, t),
        }
    }

    pub fn b(&self, x: &Point, t: f64) -> [f64; 3] {
        self.drift.as_ref().map_or([0.0; 3], |f| f(x, t))
    }

    pub fn c(&self, x: &Point, t: f64) -> f64 {
        self.reaction.as_ref().map_or(0.0, |f| f(x, t))
    }

    /// Validated diffusion matrix at one point: finite, symmetric, and
    /// positive definite on the leading `dim` block.
    pub fn checked_a(&self, x: &Point, t: f64, dim: usize) -> Result<Matrix3> {
        let a = self.a(x, t);
        let mut scale: f64 = 0.0;
        for row in a.iter().take(dim) {
            for v in row.iter().take(dim) {
                if !v.is_finite() {
                    return Err(Error::NonFinite { index: 0, value: *v });
                }
                scale = scale.max(v.abs());
            }
        }
        for j in 0..dim {
            for k in 0..j {
                if (a[j][k] - a[k][j]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::InvalidArgument(format!("diffusion matrix not symmetric at {x:?}")));
                }
            }
        }
        if !positive_definite(&a, dim) {
            return Err(Error::Indefinite { point: *x });
        }
        Ok(a)
    }

    /// Explicit stability limit `h_min^2 / (2 n a_max)`, with `a_max` the
    /// largest Gershgorin row bound of `a` over the interior cell centres.
    pub fn stability_limit(&self, grid: &Grid, t: f64) -> Result<f64> {
        let n = grid.dim();
        let a_max = match &self.diffusion {
            Diffusion::Isotropic(k) if *k > 0.0 => *k,
            Diffusion::Isotropic(k) => {
                return Err(Error::Indefinite { point: [*k, 0.0, 0.0] });
            }
            Diffusion::Field(_) => {
                let mut a_max: f64 = 0.0;
                for i in (0..grid.len()).filter(|&i| !grid.is_boundary(i)) {
                    let a = self.checked_a(&grid.center(i), t, n)?;
                    for row in a.iter().take(n) {
                        a_max = a_max.max(row.iter().take(n).map(|v| v.abs()).sum());
                    }
                }
                a_max
            }
        };
        let h = grid.min_spacing();
        Ok(h * h / (2.0 * n as f64 * a_max))
    }
}

/// Sylvester's criterion on the leading `dim x dim` block.
fn positive_definite(a: &Matrix3, dim: usize) -> bool {
    let m1 = a[0][0];
    if dim == 1 {
        return m1 > 0.0;
    }
    let m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if dim == 2 {
        return m1 > 0.0 && m2 > 0.0;
    }
    let m3 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    m1 > 0.0 && m2 > 0.0 && m3 > 0.0
}
