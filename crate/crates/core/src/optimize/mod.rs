//! Optimizers, learning-rate schedules and the instrumented training loop.

mod adam;
pub mod defaults;
mod lbfgs;
mod schedule;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use lbfgs::{lbfgs_minimize, Lbfgs, LbfgsConfig, LbfgsResult, LbfgsStatus, WOLFE_C1, WOLFE_C2};
pub use schedule::{Schedule, ScheduleKind};
pub use train::{
    steps_to_threshold, train, Monitor, OptimizerConfig, Snapshot, TrainConfig, TrainOutcome, TrainRecord, TrainStatus,
};
