use std::borrow::Borrow;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{generate_dataset, Dataset, DatasetError};
use crate::graph::GraphGenConfig;
use crate::model::{backward_accumulate, forward, init_params, predict, ModelError, ModelParams, ReadoutMode};

use super::adam::{adam_step, AdamConfig, AdamState, ShapeMismatch};
use super::metrics::{l1_error, l2_loss, EpochRecord, Metrics, SweepRow};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("{0} dataset is empty")]
    EmptyDataset(&'static str),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Shape(#[from] ShapeMismatch),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("epoch callback failed: {0}")]
    Callback(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Message rounds T.
    pub rounds: usize,
    pub mode: ReadoutMode,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub train_count: usize,
    pub val_count: usize,
    pub n_min: usize,
    pub n_max: usize,
    /// When false, `wall_time_s` is recorded as 0 so metrics are reproducible
    /// byte for byte.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rounds: 4,
            mode: ReadoutMode::Local,
            hidden: 32,
            epochs: 20,
            batch_size: 256,
            adam: AdamConfig::default(),
            seed: 0,
            train_count: 1_000,
            val_count: 200,
            n_min: 9,
            n_max: 11,
            record_wall_time: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.rounds < 1 {
            return fail("T must be at least 1");
        }
        if self.epochs < 1 {
            return fail("epochs must be at least 1");
        }
        if self.batch_size < 1 {
            return fail("batch size must be at least 1");
        }
        if self.hidden < 1 {
            return fail("hidden size must be at least 1");
        }
        if !(self.adam.learning_rate.is_finite() && self.adam.learning_rate >= 0.0) {
            return fail("learning rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return fail("Adam betas must lie in [0, 1)");
        }
        if self.adam.epsilon <= 0.0 {
            return fail("Adam epsilon must be positive");
        }
        Ok(())
    }

    /// Generator configs for the training and validation sets. The two use
    /// different seed streams so the sets are drawn independently.
    pub fn dataset_configs(&self) -> (GraphGenConfig, GraphGenConfig) {
        let base = GraphGenConfig::with_nodes(self.n_min, self.n_max, 0);
        let train = GraphGenConfig {
            seed: self.seed.wrapping_mul(2).wrapping_add(0x5eed_0001),
            ..base
        };
        let val = GraphGenConfig {
            seed: self.seed.wrapping_mul(2).wrapping_add(0x5eed_0002),
            ..base
        };
        (train, val)
    }

    /// Generates the training and validation sets described by this config.
    pub fn generate_datasets(&self) -> Result<(Dataset, Dataset), TrainError> {
        let (tc, vc) = self.dataset_configs();
        Ok((generate_dataset(&tc, self.train_count)?, generate_dataset(&vc, self.val_count)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub mean_l1: f64,
    pub mean_l2: f64,
}

/// Mean per-graph ℒ₁ and ℒ₂ over a dataset.
pub fn evaluate(params: &ModelParams, dataset: &Dataset, rounds: usize, mode: ReadoutMode) -> EvalResult {
    assert!(!dataset.is_empty(), "cannot evaluate on an empty dataset");
    let (mut l1, mut l2) = (0.0, 0.0);
    for item in dataset.iter() {
        let est = predict(params, &item.graph, rounds, mode);
        l1 += l1_error(&est, item.lambda2);
        l2 += l2_loss(&est, item.lambda2);
    }
    let n = dataset.len() as f64;
    EvalResult {
        mean_l1: l1 / n,
        mean_l2: l2 / n,
    }
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub metrics: Metrics,
}

pub fn train(config: &TrainConfig, train_set: &Dataset, val_set: &Dataset) -> Result<TrainOutcome, TrainError> {
    train_with_callback(config, train_set, val_set, |_, _| Ok(()))
}

/// Trains with minibatch Adam on the ℒ₂ loss. `on_epoch` runs after every
/// epoch with the record and the current parameters (checkpoint hook).
pub fn train_with_callback<F>(
    config: &TrainConfig,
    train_set: &Dataset,
    val_set: &Dataset,
    mut on_epoch: F,
) -> Result<TrainOutcome, TrainError>
where
    F: FnMut(&EpochRecord, &ModelParams) -> Result<(), String>,
{
    let mut trainer = Trainer::new(config.clone(), train_set, val_set)?;
    for _ in 0..config.epochs {
        let record = trainer.run_epoch()?;
        on_epoch(&record, trainer.params()).map_err(TrainError::Callback)?;
    }
    Ok(trainer.finish())
}

/// Epoch-at-a-time training state.
/// Generic over ownership so callers may either lend or hand over the data.
pub struct Trainer<D: Borrow<Dataset> = Dataset> {
    config: TrainConfig,
    train_set: D,
    val_set: D,
    params: ModelParams,
    adam: AdamState,
    shuffle_rng: ChaCha8Rng,
    order: Vec<usize>,
    metrics: Metrics,
    /// Unset when wall time is not recorded (also keeps wasm32 free of clock calls).
    started: Option<Instant>,
}

impl<D: Borrow<Dataset>> Trainer<D> {
    pub fn new(config: TrainConfig, train_set: D, val_set: D) -> Result<Self, TrainError> {
        config.validate()?;
        if train_set.borrow().is_empty() {
            return Err(TrainError::EmptyDataset("training"));
        }
        if val_set.borrow().is_empty() {
            return Err(TrainError::EmptyDataset("validation"));
        }
        let params = init_params(config.hidden, config.seed);
        Ok(Self {
            adam: AdamState::new(&params),
            params,
            shuffle_rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5348_5546_464c_4521),
            order: (0..train_set.borrow().len()).collect(),
            metrics: Metrics::default(),
            started: config.record_wall_time.then(Instant::now),
            config,
            train_set,
            val_set,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn epochs_done(&self) -> usize {
        self.metrics.epochs.len()
    }

    /// One pass over the shuffled training set followed by validation.
    pub fn run_epoch(&mut self) -> Result<EpochRecord, TrainError> {
        let cfg = &self.config;
        let epoch = self.metrics.epochs.len() + 1;
        self.order.shuffle(&mut self.shuffle_rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in self.order.chunks(cfg.batch_size).enumerate() {
            let mut grads = ModelParams::zeros(cfg.hidden);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let item = &self.train_set.borrow().items[i];
                let (_, cache) = forward(&self.params, &item.graph, cfg.rounds, cfg.mode);
                batch_loss += backward_accumulate(
                    &self.params,
                    &item.graph,
                    &cache,
                    item.lambda2,
                    cfg.mode,
                    scale,
                    &mut grads,
                )?;
            }
            if !batch_loss.is_finite() || !grads.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    batch: batch_idx + 1,
                    loss: batch_loss,
                });
            }
            epoch_loss += batch_loss;
            adam_step(&mut self.params, &grads, &mut self.adam, &cfg.adam)?;
        }

        let val = evaluate(&self.params, self.val_set.borrow(), cfg.rounds, cfg.mode);
        if !(val.mean_l1.is_finite() && val.mean_l2.is_finite()) {
            return Err(TrainError::Diverged {
                epoch,
                batch: 0,
                loss: val.mean_l2,
            });
        }
        let record = EpochRecord {
            epoch,
            train_l2: epoch_loss / self.train_set.borrow().len() as f64,
            val_l1: val.mean_l1,
            val_l2: val.mean_l2,
            wall_time_s: self.started.map_or(0.0, |t| t.elapsed().as_secs_f64()),
        };
        self.metrics.epochs.push(record);
        Ok(record)
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome {
            params: self.params,
            metrics: self.metrics,
        }
    }
}

/// Mean ℒ₁ of `params` on fresh graphs of each size in `sizes`.
///
/// Size `n` uses `gen_cfg` with the node range pinned to `n`.
pub fn generalization_sweep(
    params: &ModelParams,
    sizes: &[usize],
    per_size_count: usize,
    gen_cfg: &GraphGenConfig,
    rounds: usize,
    mode: ReadoutMode,
) -> Result<Vec<SweepRow>, TrainError> {
    if per_size_count == 0 {
        return Err(TrainError::Config("per-size count must be at least 1".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let cfg = GraphGenConfig {
                n_min: n,
                n_max: n,
                ..*gen_cfg
            };
            let ds = generate_dataset(&cfg, per_size_count)?;
            let eval = evaluate(params, &ds, rounds, mode);
            Ok(SweepRow {
                n,
                mean_l1: eval.mean_l1,
                count: per_size_count,
            })
        })
        .collect()
}
