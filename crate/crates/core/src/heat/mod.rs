//! Explicit finite differences for `u_t = L u`, whole-space heat kernel
//! quadrature, the conservation residual, and caloric replacement.

mod caloric;
mod coefficients;
mod conservation;
mod explicit;
mod kernel;

pub use caloric::{caloric_replacement, radial_average, radial_profile, CaloricReplacement, SampledFn, SpaceTimeData};
pub use coefficients::{Matrix3, OperatorCoefficients};
pub use conservation::{conservation_residual, ConservationResidual};
pub use explicit::{apply_operator, solve_dirichlet, solve_dirichlet_with, step_count, step_explicit, HeatTrajectory};
pub use kernel::heat_kernel_solution;
