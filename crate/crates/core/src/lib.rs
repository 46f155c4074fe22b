//! Numerical toolkit for the one-phase Stefan melting problem.
//!
//! The crate bundles explicit finite-difference heat solvers, front-tracking
//! Stefan solvers in one and three dimensions, Friedrichs mollifiers, heat
//! kernel quadrature, and executable maximum-principle diagnostics.

pub mod error;
pub mod grid;
pub mod heat;
pub mod mollifier;
pub mod report;
pub mod stefan1d;
pub mod stefan3d;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{
    discrete_laplacian, neighborhood_radius, parabolic_distance, positivity_set, CellMask, Grid,
    MaskedField, ParabolicCylinder, Point, SpaceTimePoint, TemperatureField,
};
pub use mollifier::{build_kernel, mollify, Extension, MollifierKernel};
pub use report::{Diagnostic, RunReport};
pub use stefan1d::{solve_stefan, FrontTrajectory, StefanSpec1D};
pub use stefan3d::{solve_stefan3d, GraphFront, StefanSpec3D};
pub use verify::BarrierParams;
