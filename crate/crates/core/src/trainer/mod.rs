//! MSE loss, Adam, and the seeded mini-batch training loop.

mod adam;

pub use adam::{adam_step, AdamConfig, AdamState};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Gradients, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::eval::cosine_similarity;
use crate::model::{AttentionNetwork, Dropout, SentenceInput};
use crate::{seeded_rng, Rng};

pub fn mse_loss(predictions: &[f64], golds: &[f64]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::shape(
            "mse_loss",
            format!("{} predictions vs {} golds", predictions.len(), golds.len()),
        ));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("mse_loss of an empty set"));
    }
    Ok(predictions
        .iter()
        .zip(golds)
        .map(|(p, g)| (p - g).powi(2))
        .sum::<f64>()
        / predictions.len() as f64)
}

/// A model trainable by [`train_model`]: parameters plus a scalar forward.
pub trait Trainable {
    type Input;

    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;

    /// Records the prediction for `input` on `tape`, using `params` in place
    /// of the model's own (so callers can evaluate perturbed copies).
    fn forward_score(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        input: &Self::Input,
        dropout: Option<Dropout<'_, Rng>>,
    ) -> Result<Var>;

    fn predict_one(&self, input: &Self::Input) -> Result<f64> {
        let mut tape = Tape::new();
        let out = self.forward_score(&mut tape, self.params(), input, None)?;
        Ok(tape.value(out).data()[0])
    }
}

impl Trainable for AttentionNetwork {
    type Input = SentenceInput;

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn forward_score(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        input: &SentenceInput,
        dropout: Option<Dropout<'_, Rng>>,
    ) -> Result<Var> {
        Ok(self.forward(tape, params, input, dropout)?.score)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub dropout: f64,
    pub adam: AdamConfig,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    /// Stop after this many epochs without validation improvement; `None`
    /// trains for every epoch.
    pub patience: Option<usize>,
    /// Fraction of the training set held out (seeded) for early stopping.
    pub validation_fraction: f64,
    /// Rescale the batch gradient when its global norm exceeds this.
    pub max_grad_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            dropout: 0.3,
            adam: AdamConfig::default(),
            epochs: 30,
            seeds: vec![1, 2, 3, 4, 5],
            patience: Some(5),
            validation_fraction: 0.1,
            max_grad_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub seed: u64,
    pub epoch: usize,
    pub loss: f64,
    pub validation_cosine: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    /// Mean training-mode squared error per epoch.
    pub epoch_losses: Vec<f64>,
    pub validation_cosine: Option<f64>,
    /// Epoch whose parameters were kept (best validation, else the last).
    pub best_epoch: usize,
    pub checkpoint: Option<std::path::PathBuf>,
}

pub struct TrainedRun<M> {
    pub result: RunResult,
    pub model: M,
}

/// Trains one model per configured seed. For each seed the run generator
/// drives, in order: parameter initialization (inside `build`), the
/// validation split, then per-epoch shuffles and dropout masks.
pub fn train_model<M, F>(
    build: F,
    data: &[(M::Input, f64)],
    config: &TrainConfig,
    log: &mut dyn FnMut(&EpochLog),
) -> Result<Vec<TrainedRun<M>>>
where
    M: Trainable + Clone,
    F: Fn(&mut Rng) -> Result<M>,
{
    config.validate()?;
    config
        .seeds
        .iter()
        .map(|&seed| train_one(&build, data, config, seed, log))
        .collect()
}

/// Mean of the per-run validation cosines (or of `metric` values generally).
pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn train_one<M, F>(
    build: &F,
    data: &[(M::Input, f64)],
    config: &TrainConfig,
    seed: u64,
    log: &mut dyn FnMut(&EpochLog),
) -> Result<TrainedRun<M>>
where
    M: Trainable + Clone,
    F: Fn(&mut Rng) -> Result<M>,
{
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let mut rng = seeded_rng(seed);
    let mut model = build(&mut rng)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let n_val = (data.len() as f64 * config.validation_fraction).floor() as usize;
    let (mut train_idx, val_idx) = if n_val >= 2 && data.len() - n_val >= 1 {
        order.shuffle(&mut rng);
        let val = order[..n_val].to_vec();
        (order[n_val..].to_vec(), val)
    } else {
        (order, Vec::new())
    };

    let mut state = AdamState::new(model.params());
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, ParamStore)> = None;
    let mut since_best = 0usize;

    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_like(model.params());
            let weight = 1.0 / batch.len() as f64;
            for &i in batch {
                let (input, gold) = &data[i];
                let mut tape = Tape::new();
                let dropout = (config.dropout > 0.0).then_some(Dropout {
                    rate: config.dropout,
                    rng: &mut rng,
                });
                let score = model
                    .forward_score(&mut tape, model.params(), input, dropout)
                    .map_err(|e| diverged(seed, epoch, i, e))?;
                let target = tape.constant(Tensor::scalar(*gold))?;
                let diff = tape.sub(score, target)?;
                let loss = tape.mul(diff, diff)?;
                let loss_value = tape.value(loss).data()[0];
                if !loss_value.is_finite() {
                    return Err(Error::Diverged(format!(
                        "seed {seed}, epoch {epoch}, instance {i}: loss {loss_value}"
                    )));
                }
                total += loss_value;
                let g = tape.backward(loss, &Tensor::scalar(weight))?;
                grads.merge_scaled(&g, 1.0);
            }
            if let Some(max) = config.max_grad_norm {
                let norm = grads.global_norm();
                if norm > max {
                    grads.scale(max / norm);
                }
            }
            adam_step(model.params_mut(), &grads, &mut state, &config.adam)?;
        }
        let epoch_loss = total / train_idx.len() as f64;
        epoch_losses.push(epoch_loss);

        let validation_cosine = if val_idx.is_empty() {
            None
        } else {
            let preds = val_idx
                .iter()
                .map(|&i| model.predict_one(&data[i].0))
                .collect::<Result<Vec<_>>>()?;
            let golds: Vec<f64> = val_idx.iter().map(|&i| data[i].1).collect();
            Some(cosine_similarity(&preds, &golds)?)
        };
        log(&EpochLog {
            seed,
            epoch,
            loss: epoch_loss,
            validation_cosine,
        });

        if let Some(cos) = validation_cosine {
            if best.as_ref().is_none_or(|(b, _, _)| cos > *b) {
                best = Some((cos, epoch, model.params().clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if config.patience.is_some_and(|p| since_best >= p) {
                    break;
                }
            }
        }
    }

    let (validation_cosine, best_epoch) = match best {
        Some((cos, epoch, params)) => {
            *model.params_mut() = params;
            (Some(cos), epoch)
        }
        None => (None, epoch_losses.len().saturating_sub(1)),
    };
    Ok(TrainedRun {
        result: RunResult {
            seed,
            epoch_losses,
            validation_cosine,
            best_epoch,
            checkpoint: None,
        },
        model,
    })
}

fn diverged(seed: u64, epoch: usize, instance: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(op) => Error::Diverged(format!(
            "seed {seed}, epoch {epoch}, instance {instance}: non-finite value in {op}"
        )),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[0.2, -0.4], &[0.2, -0.4]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(mse_loss(&[0.5, -0.5], &[0.0, 0.0]).unwrap(), 0.25);
        assert!(mse_loss(&[0.5], &[0.0, 0.0]).is_err());
        assert!(mse_loss(&[], &[]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { dropout: 1.0, ..Default::default() },
            TrainConfig { seeds: vec![], ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn published_defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.batch_size, c.dropout, c.seeds.len()), (64, 0.3, 5));
        assert_eq!(c.adam, AdamConfig { step_size: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 });
    }
}
