//! Regularized composite tensor methods of degree two and three.
//!
//! The crate computes one step of the regularized composite tensor method,
//! iterates it, wraps it in an inexact proximal outer loop, and checks every
//! guaranteed inequality of those schemes on the measured iterates. It is
//! `no_std` and needs only `alloc`; file formats and the command line live in
//! the companion `rctm` crate.
#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod composite;
pub mod error;
pub mod linalg;
pub mod math;
pub mod metric;
pub mod oracle;
pub mod problems;
pub mod prox;
pub mod rctm;
pub mod report;
pub mod step;

pub use composite::{CompositePart, Extended};
pub use error::{Error, Result};
pub use metric::Metric;
pub use oracle::{CountingOracle, SmoothFunction, SmoothOracle, TaylorModel, UniformConvexity};
pub use problems::Problem;
pub use prox::{run_inexact_prox, ProxConfig, ProxTrace};
pub use rctm::{run_rctm, RunTrace, StopRule};
pub use report::{CheckOutcome, Inequality, Verification};
pub use step::{solve_step, StepCertificate, StepConfig, StepOutcome, Subsolver};
