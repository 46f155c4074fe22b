//! Three-dimensional one-phase Stefan problem with the free boundary as a
//! graph `z = rho(x, y, t)` over the liquid, moved by
//! `rho_t = -k1 (u_z - rho_x u_x - rho_y u_y)`.

mod front;
mod solver;

pub use front::{front_normal, GraphFront};
pub use solver::{
    column_layout, coupled_step_3d, evolve_front, front_gradients, normal_velocity, run_stefan3d, solve_stefan3d,
    FrontShape, FrontUpdate, InitialTemperature3D, PhaseDomain, State3D, Step3D, Stefan3DRun, StefanSpec3D,
};
