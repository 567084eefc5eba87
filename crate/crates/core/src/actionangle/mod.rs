//! Flows, period lattices, action and angle coordinates, and null-line orbits.

pub mod integrator;
pub mod lattice;
pub mod nullline;
pub mod torus;

pub use integrator::{flow_point, integrate, integrate_flow, integrate_flow_at, joint_flow, FlowOptions, Solution, Trajectory};
pub use lattice::{first_return_time, period_lattice, refine_period, return_residual, LatticeOptions, PeriodLattice};
pub use torus::{
    action_variables, base_jacobian, normal_form_residual, uniformize, ActionAngleOptions, Actions, NormalFormReport,
    Primitive, Section, TorusChart, UniformSample, Uniformization,
};
pub use nullline::{null_line_closed_orbits, ClosedOrbit, NullLineOptions, NullLineReport};
