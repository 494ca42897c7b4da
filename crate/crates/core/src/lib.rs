//! Safety filters for a planar double integrator built on control barrier
//! functions.
//!
//! The crate covers the full pipeline:
//!
//! - [`hocbf`] — flattening the high-order chain condition with linear
//!   gains into derivative coefficients, plus gain feasibility checks;
//! - [`bounds`] — the closed-form exponential-sum decay bound implied by a
//!   tight chain condition, and its discrete geometric counterpart;
//! - [`plant`] — the double-integrator obstacle barrier and assembly of
//!   per-step linear input constraints for both the chain condition and the
//!   one-step truncated-Taylor condition;
//! - [`qp`] — an exact active-set solver for the resulting two-variable
//!   tracking QP;
//! - [`sim`] — closed-loop simulation and post-hoc verification of the
//!   decay guarantees on logged trajectories.

pub mod bounds;
pub mod error;
pub mod hocbf;
mod linalg;
pub mod plant;
pub mod qp;
pub mod sim;

pub use error::{Error, Result};
