//! The flow map `phi` and `v = phi_t` as a first-order ODE, with the initial
//! temperature as a parameter.

mod pressure;
mod solver;

pub use pressure::{buoyancy_pressure_term, compute_b, unsplit_pressure_gradient};
pub use solver::{
    div_diagnostic, flow_map, scaled_solution_map, solution_map_phi, solve, step_rk4,
    vector_field, Diagnostics, LagrangianState, SolverParams, Trajectory,
};
