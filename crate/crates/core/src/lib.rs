//! Numerical toolkit for the McKean-Vlasov form of the supercooled Stefan problem.
//!
//! The loss process `Λ_t = α P(τ ≤ t)` of a Brownian particle killed at zero,
//! pushed down by its own loss, is computed three ways:
//!
//! * [`solvers::minimal_picard`] iterates the loss operator from the zero boundary
//!   and converges to the pointwise-smallest solution;
//! * [`solvers::physical_timestep`] marches in time and resolves blow-ups with the
//!   smallest admissible jump;
//! * [`particles::simulate`] runs the finite particle system with greedy cascades.
//!
//! [`harness`] strings these together into initial-data sensitivity experiments,
//! and [`m1`] supplies the path distances used to compare them.

pub mod cli;
pub mod config;
pub mod density;
pub mod error;
pub mod grid;
pub mod harness;
pub mod law;
pub mod m1;
pub mod par;
pub mod particles;
pub mod path;
pub mod solvers;
mod special;

pub use config::{Execution, SimulationConfig};
pub use error::{Error, Result};
pub use grid::SubProbabilityGrid;
pub use law::InitialLaw;
pub use path::BoundaryPath;
