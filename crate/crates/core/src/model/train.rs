//! Mini-batch gradient descent on (noisy, clean) pairs.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::forward::{infer, loss_and_gradients, loss_mse};
use super::params::{Gradients, Parameters};
use super::spec::NetworkSpec;
use crate::metrics::{self, QualitySummary};
use crate::rng::{self, stream};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub noisy: Tensor<f64>,
    pub clean: Tensor<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    Sgd,
    #[default]
    SgdMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub momentum: f64,
    pub seed: u64,
    /// Reserved for a sparsity penalty; must stay 0.
    pub l1_lambda: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.15,
            optimizer: Optimizer::SgdMomentum,
            momentum: 0.9,
            seed: 0,
            l1_lambda: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        // lr = 0 is allowed as a no-op run
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(alloc::format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.l1_lambda != 0.0 {
            return Err(Error::InvalidArgument("l1_lambda is reserved and must be 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-image loss over the epoch's mini-batches.
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Noisy input against clean target on the validation set.
    pub baseline: QualitySummary,
    /// Reconstruction against clean target on the validation set.
    pub denoised: QualitySummary,
}

/// Evaluates independent per-item work, possibly in parallel.
///
/// Results must come back in index order; the trainer then reduces them sequentially, so
/// the outcome does not depend on how the work was scheduled.
pub trait BatchExecutor {
    fn map<R: Send>(&self, n: usize, f: &(dyn Fn(usize) -> R + Sync)) -> Vec<R>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BatchExecutor for Sequential {
    fn map<R: Send>(&self, n: usize, f: &(dyn Fn(usize) -> R + Sync)) -> Vec<R> {
        (0..n).map(f).collect()
    }
}

/// Progress and timing hooks. The core has no clock, so timing is supplied by the caller.
pub trait TrainHooks {
    /// Monotonic seconds since an arbitrary origin.
    fn now(&mut self) -> f64 {
        0.0
    }

    fn on_epoch(&mut self, _stats: &EpochStats) {}
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoHooks;

impl TrainHooks for NoHooks {}

struct Momentum {
    velocity: Gradients,
}

fn apply_update(params: &mut Parameters<f64>, grads: &Gradients, cfg: &TrainConfig, state: &mut Option<Momentum>) {
    let lr = cfg.learning_rate;
    match (cfg.optimizer, state) {
        (Optimizer::SgdMomentum, Some(m)) => {
            let mu = cfg.momentum;
            m.velocity.zip_mut(grads, |v, g| *v = mu * *v + g);
            params.zip_mut(&m.velocity, |w, v| *w -= lr * v);
        }
        _ => params.zip_mut(grads, |w, g| *w -= lr * g),
    }
}

/// Mean validation loss under the current parameters.
pub fn validation_loss<E: BatchExecutor>(
    spec: &NetworkSpec,
    params: &Parameters<f64>,
    pairs: &[TrainingPair],
    exec: &E,
) -> Result<f64> {
    let losses = exec.map(pairs.len(), &|i| {
        let p = &pairs[i];
        infer(spec, params, &p.noisy).and_then(|out| loss_mse(&out, &p.clean))
    });
    let mut sum = 0.0;
    for l in losses {
        sum += l?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Trains from `initial` parameters.
///
/// Each epoch shuffles the training pairs with the seed's shuffle stream, then for every
/// mini-batch averages per-pair gradients (summed in batch order) and takes one optimizer
/// step. A non-finite batch loss or gradient aborts with [`Error::Diverged`].
pub fn train_from<E: BatchExecutor, H: TrainHooks>(
    spec: &NetworkSpec,
    initial: Parameters<f64>,
    train_pairs: &[TrainingPair],
    val_pairs: &[TrainingPair],
    cfg: &TrainConfig,
    exec: &E,
    hooks: &mut H,
) -> Result<(Parameters<f64>, TrainReport)> {
    cfg.validate()?;
    initial.check_against(spec)?;
    if train_pairs.is_empty() || val_pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let mut params = initial;
    let mut momentum = (cfg.optimizer == Optimizer::SgdMomentum).then(|| Momentum {
        velocity: Parameters::zeros(spec),
    });
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut shuffle_rng = rng::seeded_stream(cfg.seed, stream::SHUFFLE);
    let mut epochs = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let start = hooks.now();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results = exec.map(batch.len(), &|k| {
                let p = &train_pairs[batch[k]];
                loss_and_gradients(spec, &params, &p.noisy, &p.clean)
            });
            let mut total = Parameters::zeros(spec);
            let mut batch_loss = 0.0;
            for r in results {
                let (loss, g) = r?;
                batch_loss += loss;
                total.zip_mut(&g, |acc, v| *acc += v);
            }
            if !batch_loss.is_finite() || !total.values().all(f64::is_finite) {
                return Err(Error::Diverged {
                    epoch,
                    loss: batch_loss,
                });
            }
            total.scale(1.0 / batch.len() as f64);
            apply_update(&mut params, &total, cfg, &mut momentum);
            loss_sum += batch_loss;
        }
        let train_loss = loss_sum / train_pairs.len() as f64;
        let val_loss = validation_loss(spec, &params, val_pairs, exec)?;
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: val_loss });
        }
        let stats = EpochStats {
            epoch,
            train_loss,
            val_loss,
            seconds: hooks.now() - start,
        };
        hooks.on_epoch(&stats);
        epochs.push(stats);
    }

    let (baseline, denoised) = evaluate(spec, &params, val_pairs, exec)?;
    Ok((
        params,
        TrainReport {
            epochs,
            baseline,
            denoised,
        },
    ))
}

/// Trains from Glorot-initialized parameters seeded by `cfg.seed`.
pub fn train<E: BatchExecutor, H: TrainHooks>(
    spec: &NetworkSpec,
    train_pairs: &[TrainingPair],
    val_pairs: &[TrainingPair],
    cfg: &TrainConfig,
    exec: &E,
    hooks: &mut H,
) -> Result<(Parameters<f64>, TrainReport)> {
    let initial = super::params::init_parameters(spec, cfg.seed);
    train_from(spec, initial, train_pairs, val_pairs, cfg, exec, hooks)
}

/// Quality of the noisy inputs and of their reconstructions, each against the clean targets.
pub fn evaluate<E: BatchExecutor>(
    spec: &NetworkSpec,
    params: &Parameters<f64>,
    pairs: &[TrainingPair],
    exec: &E,
) -> Result<(QualitySummary, QualitySummary)> {
    let outputs = exec.map(pairs.len(), &|i| infer(spec, params, &pairs[i].noisy));
    let outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;
    let noisy: Vec<_> = pairs.iter().map(|p| p.noisy.clone()).collect();
    let clean: Vec<_> = pairs.iter().map(|p| p.clean.clone()).collect();
    Ok((
        metrics::summarize(&noisy, &clean)?,
        metrics::summarize(&outputs, &clean)?,
    ))
}

/// Pairs each clean image with its corrupted copy.
pub fn make_pairs(noisy: Vec<Tensor<f64>>, clean: Vec<Tensor<f64>>) -> Result<Vec<TrainingPair>> {
    if noisy.len() != clean.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} noisy images for {} clean ones",
            noisy.len(),
            clean.len()
        )));
    }
    Ok(noisy
        .into_iter()
        .zip(clean)
        .map(|(noisy, clean)| TrainingPair { noisy, clean })
        .collect())
}
