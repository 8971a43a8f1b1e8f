//! The two-stage parcellation network and its training loop.

mod config;
mod model;
mod prepared;
mod train;

pub use config::{CoarseNetConfig, KernelConfig, ModelConfig, RefineNetConfig, Schedule};
pub use model::{
    argmax_rows, refine_objective, CoarseNet, CoarseOutput, OptimizerState, ParcellationModel,
    Prediction, RefineNet, RefineOutput, Stage, StepStats,
};
pub use prepared::PreparedSubject;
pub use train::{train_stage, train_two_stage, EpochMetrics};
