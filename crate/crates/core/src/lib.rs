//! Hamiltonian dynamics and integrable systems on folded and b-symplectic
//! manifolds.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: charts, fields, singular forms and their validators;
//! * [`hamiltonian`]: observables, `ι_X ω = −df` and Poisson brackets;
//! * [`systems`]: integrable systems and their commutation/independence checks;
//! * [`actionangle`]: flows, period lattices, actions, angles, null-line orbits;
//! * [`constructions`]: lifts, desingularization, products, averaging,
//!   mapping tori, obstruction reports and template checks;
//! * [`gallery`]: worked examples with closed-form oracles;
//! * [`config`] and [`report`]: declarative inputs and structured outputs.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod hamiltonian;
pub mod linalg;
pub mod profiles;
pub mod real;
pub mod sampling;
pub mod systems;
pub mod actionangle;
pub mod constructions;
pub mod gallery;
pub mod config;
pub mod report;

pub use error::{Error, Result};
