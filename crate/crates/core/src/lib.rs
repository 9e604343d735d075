//! Deformed RSJ flows on the two-torus, their Möbius Poincaré maps, and the
//! Fuchsian and confluent linear systems and Heun equations behind them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod flow;
pub mod format;
pub mod heun;
pub mod mat2;
pub mod ode;
pub mod params;
pub mod portrait;
pub mod rng;
pub mod su11;

pub use error::{Error, Result};
