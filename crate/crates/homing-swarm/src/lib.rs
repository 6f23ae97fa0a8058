//! Simulation, theory, and planning toolkit for collectives of noisy
//! goal-seeking agents with forward sensing cones.
//!
//! Agents home in on individually assigned goals in a square arena using
//! random walks whose headings carry Gaussian rotational noise. Each agent
//! halts forward motion whenever another agent's center falls inside its
//! forward sensing cone, which produces a traffic-jam phase transition as
//! the noise level is lowered. The crate provides:
//!
//! - [`geometry`]: torus metrics, sensing-cone tests, noisy step sampling.
//! - [`dynamics`]: the synchronous world stepper with the constant-noise
//!   and conditional-noise reactive controllers, plus trial metrics.
//! - [`theory`]: closed-form approximations for goal attainment, collision
//!   frequency, jam entry/exit times, and the critical noise level.
//! - [`optimizer`]: exhaustive scan for the team size maximizing predicted
//!   attainment.
//! - [`planner`]: a lifelong cooperative A* planner on a time-expanded grid
//!   with a shared reservation ledger and an independent plan validator.
//! - [`harness`]: presets, parameter sweeps, CSV/SVG output, and the
//!   controller comparison pipeline behind the CLI.
//!
//! See the `examples/` directory for runnable entry points covering each of
//! these capabilities, and the `homing-swarm` binary for the batch CLI.

pub mod dynamics;
pub mod erf;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod optimizer;
pub mod planner;
pub mod theory;

pub use error::{Error, Result};
