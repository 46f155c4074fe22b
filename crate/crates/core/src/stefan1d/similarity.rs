use std::f64::consts::PI;

use libm::erf;

use crate::error::{Error, Result};

const BRACKET: (f64, f64) = (1e-8, 10.0);

/// Neumann similarity solution of the one-phase problem on the half line
/// with constant boundary temperature `theta`:
/// `u = theta (1 - erf(x / 2 sqrt(D t)) / erf(lambda))`, `s = 2 lambda sqrt(D t)`,
/// where `lambda exp(lambda^2) erf(lambda) = St / sqrt(pi)` and
/// `St = k1 theta / D`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub lambda: f64,
    pub theta: f64,
    pub diffusivity: f64,
}

/// Transcendental function whose root defines `lambda`.
pub fn neumann_lhs(lambda: f64) -> f64 {
    lambda * (lambda * lambda).exp() * erf(lambda)
}

/// `lambda` for the unit problem (`theta = D = 1`, `St = k1`).
pub fn similarity_oracle(stefan_number: f64) -> Result<Similarity> {
    Similarity::new(stefan_number, 1.0, 1.0)
}

impl Similarity {
    pub fn new(k1: f64, theta: f64, diffusivity: f64) -> Result<Self> {
        if !(k1 > 0.0 && theta > 0.0 && diffusivity > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "similarity solution needs k1, theta, D > 0 (got {k1}, {theta}, {diffusivity})"
            )));
        }
        let st = k1 * theta / diffusivity;
        let target = st / PI.sqrt();
        let (mut lo, mut hi) = BRACKET;
        if !(neumann_lhs(lo) < target && target < neumann_lhs(hi)) {
            return Err(Error::InvalidArgument(format!("Stefan number {st} outside the bracket [1e-8, 10]")));
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if neumann_lhs(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = if (neumann_lhs(lo) - target).abs() <= (neumann_lhs(hi) - target).abs() { lo } else { hi };
        Ok(Self { lambda, theta, diffusivity })
    }

    pub fn stefan_number(&self) -> f64 {
        neumann_lhs(self.lambda) * PI.sqrt()
    }

    /// `|lambda e^{lambda^2} erf(lambda) - St / sqrt(pi)|` for the returned root.
    pub fn residual(&self, stefan_number: f64) -> f64 {
        (neumann_lhs(self.lambda) - stefan_number / PI.sqrt()).abs()
    }

    pub fn front(&self, t: f64) -> f64 {
        2.0 * self.lambda * (self.diffusivity * t).sqrt()
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.lambda * (self.diffusivity / t).sqrt()
    }

    /// Temperature; zero in the solid `x >= s(t)`.
    pub fn temperature(&self, x: f64, t: f64) -> f64 {
        if x >= self.front(t) {
            return 0.0;
        }
        self.theta * (1.0 - erf(x / (2.0 * (self.diffusivity * t).sqrt())) / erf(self.lambda))
    }

    /// `u_x` on the liquid side.
    pub fn gradient(&self, x: f64, t: f64) -> f64 {
        let dt = self.diffusivity * t;
        -self.theta * (-x * x / (4.0 * dt)).exp() / ((PI * dt).sqrt() * erf(self.lambda))
    }

    /// `u_t` on the liquid side.
    pub fn time_derivative(&self, x: f64, t: f64) -> f64 {
        let dt = self.diffusivity * t;
        self.theta * x * (-x * x / (4.0 * dt)).exp() / (2.0 * t * (PI * dt).sqrt() * erf(self.lambda))
    }

    /// Time at which the front sits at `b`.
    pub fn time_of_front(&self, b: f64) -> f64 {
        (b / (2.0 * self.lambda)).powi(2) / self.diffusivity
    }
}
