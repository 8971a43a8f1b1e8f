//! Dataset files, run configuration, checkpoints and evaluation output.

mod checkpoint;
mod config;
mod dataset;
mod export;
mod manifest;
mod pipeline;
mod report;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{config_hash, RunConfig, OUTPUT_DIR_ENV};
pub use dataset::{kfold_split, load_dataset, save_dataset, write_synthetic_dataset, LoadedSubject};
pub use export::{format_metrics_log, write_metrics_log, write_prediction, PredictionFiles};
pub use manifest::{DatasetManifest, SubjectRecord};
pub use pipeline::{cross_validate, evaluate_model, prepare_subjects, train_models, FoldResult, TrainedModels};
pub use report::{hard_dice, majority_label, EvaluationReport, SubjectScore, Summary};
