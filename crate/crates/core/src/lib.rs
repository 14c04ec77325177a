//! Nonlinear averaging operators on finite metric measure spaces.
//!
//! The mean `M`, the mid-range `S` and their combination
//! `T_α = α S + (1 − α) M` act on real fields over closed balls
//! `B̄(x, ρ(x))` of an admissible radius function. The crate solves the
//! Dirichlet problem for `T_α u = u`, estimates the structural constants of
//! the space and checks the regularity bounds satisfied by fixed points.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod io;
pub mod operators;
pub mod pairs;
pub mod par;
pub mod radius;
pub mod regularity;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
pub use par::Execution;
