//! Message-passing network: parameters, forward pass, reverse-mode gradients,
//! gradient checking and checkpoints.

mod backward;
mod checkpoint;
mod forward;
mod gradcheck;
mod params;

use thiserror::Error;

pub use backward::{backward, backward_accumulate, squared_loss};
pub use checkpoint::{Checkpoint, CheckpointError, CheckpointMeta, PARAMS_MAGIC};
pub use forward::{
    aggregate, forward, gru_cell, gru_update, initial_state, mean_pool, message_step, outgoing_message, predict,
    readout_global, readout_local, Estimates, ForwardCache, GruGates, ReadoutCache, StepCache,
};
pub use gradcheck::{compare_with_finite_differences, grad_check, grad_check_against, relative_error};
pub use params::{
    init_params, Gradients, GruParams, ModelParams, ReadoutMode, ReadoutParams, TensorMut, TensorRef,
    DEFAULT_HIDDEN,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("forward cache does not match this call: {0}")]
    CacheMismatch(String),
}
