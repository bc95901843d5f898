//! Training of the adaptive LUT model with the human-region weighted loss
//! and the crop-pair consistency loss, plus dataset evaluation.

mod config;
mod data;
mod eval;
mod loss;
mod optim;
mod train;

pub use config::TrainConfig;
pub use data::{load_sample, load_samples, Sample};
pub use eval::{evaluate, evaluate_samples, EvalOptions, Resolution, Retoucher};
pub use loss::{loss_glc, loss_hc, LossBreakdown};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use train::{init_model, save_log_csv, train, train_from, train_step, write_log_csv, EpochLog, TrainOutcome};
