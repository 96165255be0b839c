//! Optimization, evaluation and the experiment harnesses.

mod adam;
mod metrics;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState, ShapeMismatch};
pub use metrics::{l1_error, l2_loss, sweep_csv, EpochRecord, Metrics, SweepRow, METRICS_HEADER, SWEEP_HEADER};
pub use trainer::{
    evaluate, generalization_sweep, train, train_with_callback, EvalResult, TrainConfig, TrainError, TrainOutcome, Trainer,
};
