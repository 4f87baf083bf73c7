//! Phase equilibria by enumerating candidate phase splits on a composition
//! grid, with a softmax relaxation of the minimum for gradient-based model
//! fitting.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod apps;
pub mod cli;
pub mod enumerate;
pub mod error;
pub mod gibbs;
pub mod grid;
pub mod io;
pub mod solver;
pub mod train;

pub use error::{Error, Result};
