//! Stacking: out-of-fold component predictions feed a small MLP combiner.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::model::Dropout;
use crate::trainer::{train_model, AdamConfig, TrainConfig, Trainable};
use crate::Rng;

pub const CHECKPOINT_KIND: &str = "mlp-combiner";

/// `tanh(w_o . tanh(W_h x + b_h) + b_o)` over component predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleMlp {
    pub inputs: usize,
    pub hidden: usize,
    pub params: ParamStore,
}

impl EnsembleMlp {
    /// Glorot hidden layer; the output layer starts at zero, so a fresh
    /// combiner predicts 0 everywhere.
    pub fn new(inputs: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        if inputs == 0 || hidden == 0 {
            return Err(Error::invalid("combiner needs at least one input and one hidden unit"));
        }
        let mut params = ParamStore::new();
        params.insert_glorot("hidden.w", hidden, inputs, rng);
        params.insert("hidden.b", Tensor::zeros(&[hidden]));
        params.insert("out.w", Tensor::zeros(&[hidden]));
        params.insert("out.b", Tensor::scalar(0.0));
        Ok(Self { inputs, hidden, params })
    }

    pub fn predict(&self, components: &[f64]) -> Result<f64> {
        self.predict_one(&components.to_vec())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(CHECKPOINT_KIND, self.params.clone())
            .with_meta("inputs", self.inputs)
            .with_meta("hidden", self.hidden)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.kind != CHECKPOINT_KIND {
            return Err(Error::Config(format!("checkpoint kind `{}` is not `{CHECKPOINT_KIND}`", ck.kind)));
        }
        let inputs: usize = ck.meta_parse("inputs")?;
        let hidden: usize = ck.meta_parse("hidden")?;
        let expected = [
            ("hidden.w", vec![hidden, inputs]),
            ("hidden.b", vec![hidden]),
            ("out.w", vec![hidden]),
            ("out.b", vec![]),
        ];
        for (name, shape) in expected {
            if ck.params.get(name)?.shape() != shape.as_slice() {
                return Err(Error::Config(format!("combiner parameter `{name}` has the wrong shape")));
            }
        }
        Ok(Self {
            inputs,
            hidden,
            params: ck.params.clone(),
        })
    }
}

impl Trainable for EnsembleMlp {
    type Input = Vec<f64>;

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
        input: &Vec<f64>,
        _dropout: Option<Dropout<'_, Rng>>,
    ) -> Result<Var> {
        if input.len() != self.inputs {
            return Err(Error::shape(
                "ensemble",
                format!("combiner expects {} inputs, got {}", self.inputs, input.len()),
            ));
        }
        let x = tape.constant(Tensor::vector(input.clone()))?;
        let w = tape.param(params, "hidden.w")?;
        let b = tape.param(params, "hidden.b")?;
        let z = tape.matvec(w, x)?;
        let z = tape.add(z, b)?;
        let z = tape.tanh(z)?;
        let wo = tape.param(params, "out.w")?;
        let bo = tape.param(params, "out.b")?;
        let o = tape.dot(wo, z)?;
        let o = tape.add(o, bo)?;
        tape.tanh(o)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub hidden: usize,
    pub folds: usize,
    pub train: TrainConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            hidden: 8,
            folds: 5,
            train: TrainConfig {
                batch_size: 16,
                dropout: 0.0,
                adam: AdamConfig {
                    step_size: 1e-2,
                    ..AdamConfig::default()
                },
                epochs: 150,
                seeds: vec![1],
                patience: Some(15),
                validation_fraction: 0.1,
                max_grad_norm: None,
            },
        }
    }
}

/// Which instances trained and which were predicted in one fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldAudit {
    pub fold: usize,
    pub trained_on: Vec<usize>,
    pub predicted: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OofMatrix {
    /// One row per instance, one column per component.
    pub rows: Vec<Vec<f64>>,
    pub fold_of: Vec<usize>,
    pub audit: Vec<FoldAudit>,
}

impl OofMatrix {
    /// True when no row came from a component fitted on that row's instance.
    pub fn is_leak_free(&self) -> bool {
        (0..self.rows.len()).all(|i| {
            let fold = &self.audit[self.fold_of[i]];
            fold.predicted.contains(&i) && !fold.trained_on.contains(&i)
        })
    }
}

/// A component fitter: trains on the first index set and returns
/// predictions for the second, in order.
pub type Component<'a> = dyn Fn(&[usize], &[usize]) -> Result<Vec<f64>> + 'a;

/// Out-of-fold predictions for `n` instances. Fold membership is a seeded
/// shuffle dealt round-robin.
pub fn build_oof_matrix(
    n: usize,
    folds: usize,
    components: &[&Component<'_>],
    rng: &mut Rng,
) -> Result<OofMatrix> {
    if folds < 2 {
        return Err(Error::invalid("out-of-fold stacking needs at least 2 folds"));
    }
    if folds > n {
        return Err(Error::invalid(format!("{folds} folds exceed {n} instances")));
    }
    if components.is_empty() {
        return Err(Error::invalid("no components to stack"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    let mut rows = vec![vec![0.0; components.len()]; n];
    let mut audit = Vec::with_capacity(folds);
    for fold in 0..folds {
        let (predicted, trained_on): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == fold);
        for (c, fit) in components.iter().enumerate() {
            let preds = fit(&trained_on, &predicted)?;
            if preds.len() != predicted.len() {
                return Err(Error::shape(
                    "build_oof_matrix",
                    format!("component {c} returned {} predictions for {}", preds.len(), predicted.len()),
                ));
            }
            for (&i, p) in predicted.iter().zip(preds) {
                rows[i][c] = p;
            }
        }
        log::debug!("fold {fold}: {} train / {} held out", trained_on.len(), predicted.len());
        audit.push(FoldAudit {
            fold,
            trained_on,
            predicted,
        });
    }
    Ok(OofMatrix { rows, fold_of, audit })
}

/// Fits the combiner on stacked rows with the shared training loop.
pub fn train_ensemble(inputs: &[Vec<f64>], targets: &[f64], config: &EnsembleConfig, seed: u64) -> Result<EnsembleMlp> {
    if inputs.len() != targets.len() {
        return Err(Error::shape("train_ensemble", format!("{} rows vs {} targets", inputs.len(), targets.len())));
    }
    if inputs.len() < 2 {
        return Err(Error::invalid("combiner needs at least two rows"));
    }
    let width = inputs[0].len();
    if inputs.iter().any(|r| r.len() != width) {
        return Err(Error::shape("train_ensemble", "ragged combiner rows"));
    }
    if targets.iter().all(|&t| t == targets[0]) {
        log::warn!("combiner targets are constant ({}); training anyway", targets[0]);
    }
    let data: Vec<(Vec<f64>, f64)> = inputs.iter().cloned().zip(targets.iter().copied()).collect();
    let cfg = TrainConfig {
        seeds: vec![seed],
        ..config.train.clone()
    };
    let mut runs = train_model(
        |rng| EnsembleMlp::new(width, config.hidden, rng),
        &data,
        &cfg,
        &mut |log| log::trace!("combiner epoch {} loss {:.4e}", log.epoch, log.loss),
    )?;
    Ok(runs.remove(0).model)
}

/// Final score for one instance's component predictions.
pub fn predict_ensemble(mlp: &EnsembleMlp, components: &[f64]) -> Result<f64> {
    mlp.predict(components)
}
