//! Loss functions, optimizer loop and metrics for fitting excess Gibbs
//! energy models to equilibrium composition labels.

pub mod config;
pub mod fit;
pub mod loss;
pub mod metrics;
pub mod optim;

pub use config::{FitConfig, LrSchedule, OptimizerKind};
pub use fit::{fit_system, fit_systems, predict, FitReport, MultiFitReport, SystemFit};
pub use loss::{
    direct_loss, gibbs_loss, hessian_loss, label_target, total_loss, Estimator, LossGrids,
};
pub use metrics::{metrics, Metrics};
