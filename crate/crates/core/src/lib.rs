//! Hybrid volt/var control for medium-voltage distribution grids.
//!
//! A droop rules policy and a soft actor-critic policy both propose
//! actuator setpoints every step. A world model scores each proposal with
//! an AC power flow and a discriminator applies the one whose smoothed
//! score is higher.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod discriminator;
pub mod env;
pub mod grid;
pub mod harness;
pub mod nn;
pub mod policies;
pub mod reward;
pub mod worldmodel;
