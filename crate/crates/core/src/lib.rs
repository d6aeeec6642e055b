//! Simulation and adaptive-neuro geometric control of a rigid payload carried
//! by several quadrotors on rigid massless cables.
//!
//! The crate is layered bottom-up: [`geometry`] provides SO(3) and S² maps and
//! tracking errors, [`dynamics`] the disturbance-augmented equations of
//! motion and tension allocation, [`controller`] the full control cascade,
//! [`disturbances`] the signal generators, [`integrator`] the fixed-step
//! closed-loop run, and [`harness`] scenarios, diagnostics and outputs.

pub mod controller;
pub mod disturbances;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod integrator;

pub use error::{Error, Result};
