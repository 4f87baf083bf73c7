//! End-to-end applications: label generation, vapor pressure and ternary
//! three-phase splits.

pub mod dataset;
pub mod llle;
pub mod vle;

pub use dataset::{generate_labels, label_system, DatasetRow, SystemSpec};
pub use llle::{solve_llle, LlleMethod, LlleResult};
pub use vle::{log_spaced_volumes, vapor_pressure, VleOutcome, VleResult};
