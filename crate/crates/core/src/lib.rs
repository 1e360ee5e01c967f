//! Bregman inertial forward-reflected-backward splitting for composite
//! problems `min f + g` where `f` is smooth relative to a Legendre kernel.

// `!(a > b)` is used on purpose: NaN must fail the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envelope;
pub mod error;
pub mod ext;
pub mod harness;
pub mod kernel;
pub mod linesearch;
pub mod planner;
pub mod problem;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use ext::Ext;
pub use kernel::{Kernel, Vector};
pub use planner::{PlanRequest, PlannedParams};
pub use problem::ProblemInstance;
