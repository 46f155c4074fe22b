//! One-dimensional Stefan problem: front tracking in front-fixed
//! coordinates, with an optional second (solid) phase, and the Neumann
//! similarity solution used to validate it.

mod front;
mod similarity;
mod solver;

pub use front::FrontTrajectory;
pub use similarity::{neumann_lhs, similarity_oracle, Similarity};
pub use solver::{
    front_gradient, front_velocity, run_stefan, solid_front_gradient, solve_stefan, step_stefan, to_physical,
    BoundaryTemperature, FrontState1D, InitialTemperature, SecondPhase, StefanRun, StefanSpec1D,
};
