//! Loss, optimizer, the epoch loop with best-validation snapshotting, and
//! repeated stratified re-splits.

mod adam;
mod check;
mod loss;
mod split;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use check::{batch_cost, model_grad_check, tiny_model_check};
pub use loss::{
    backprop_batch, cross_entropy, cross_entropy_grad, regularized_cost, squared_norm,
    BatchGradient, L2Scope, Regularization, PROB_FLOOR,
};
pub use split::{apportion, split_stratified, Split};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::model::Model;
use crate::rng::Rng;
use crate::tensor::{argmax, Float};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub l2_lambda: f64,
    pub l2_scope: L2Scope,
    pub batch_size: usize,
    pub epochs: usize,
    pub folds: usize,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            l2_lambda: 1e-3,
            l2_scope: L2Scope::Weights,
            batch_size: 64,
            epochs: 100,
            folds: 10,
            split: [0.8, 0.05, 0.15],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.adam_eps > 0.0) {
            return Err(Error::invalid(
                "learning_rate and adam_eps must be positive",
            ));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::invalid("beta1 and beta2 must lie in [0, 1)"));
        }
        if !(self.l2_lambda >= 0.0) {
            return Err(Error::invalid("l2_lambda must be non-negative"));
        }
        if self.batch_size == 0 || self.folds == 0 {
            return Err(Error::invalid("batch_size and folds must be positive"));
        }
        let total: f64 = self.split.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.split.iter().any(|&f| f <= 0.0) {
            return Err(Error::invalid(format!(
                "split fractions {:?} must be positive and sum to 1",
                self.split
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    pub fn regularization(&self) -> Regularization {
        Regularization {
            lambda: self.l2_lambda,
            scope: self.l2_scope,
        }
    }
}

/// A tokenized `[S·T]` document and its class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<u32>,
    pub label: usize,
}

/// Inference-mode loss and accuracy after one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    for r in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetEvaluation {
    /// Mean cross-entropy, no penalty.
    pub loss: f64,
    pub accuracy: f64,
    pub probs: Vec<Vec<Float>>,
}

/// Inference over `examples` in chunks of `batch_size`.
pub fn evaluate_examples(
    model: &Model,
    examples: &[Example],
    batch_size: usize,
) -> Result<SetEvaluation> {
    if examples.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut rng = Rng::new(0);
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut probs = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch_size.max(1)) {
        let docs: Vec<&[u32]> = chunk.iter().map(|e| e.tokens.as_slice()).collect();
        let pass = model.forward_batch(&docs, false, &mut rng)?;
        for (i, ex) in chunk.iter().enumerate() {
            let p = pass.probs(i).data();
            loss += cross_entropy(p, ex.label);
            if argmax(p) == ex.label {
                correct += 1;
            }
            probs.push(p.to_vec());
        }
    }
    let n = examples.len() as f64;
    Ok(SetEvaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
        probs,
    })
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the highest validation accuracy (earliest
    /// on ties); the initial parameters when no epoch ran.
    pub best: Model,
    pub best_epoch: Option<usize>,
    pub best_val_acc: Option<f64>,
    pub history: Vec<EpochRecord>,
}

/// Mini-batch Adam training. Each epoch reshuffles the training set with
/// `rng`, trains on every batch including a final partial one, then records
/// inference-mode loss and accuracy on both sets.
pub fn train(
    mut model: Model,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    rng: &mut Rng,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::NoSamples);
    }
    let adam = cfg.adam();
    let reg = cfg.regularization();
    let mut state = AdamState::new(&model);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = model.clone();
    let mut best_epoch = None;
    let mut best_val_acc: Option<f64> = None;

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let docs: Vec<&[u32]> = batch
                .iter()
                .map(|&i| train_set[i].tokens.as_slice())
                .collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_set[i].label).collect();
            let step = backprop_batch(&model, &docs, &labels, reg, rng).map_err(|e| match e {
                Error::NonFiniteLoss(i) => Error::NonFiniteLoss(batch[i]),
                other => other,
            })?;
            adam_step(&mut model, &step.grads, &mut state, &adam)?;
        }
        let tr = evaluate_examples(&model, train_set, cfg.batch_size)?;
        let va = evaluate_examples(&model, val_set, cfg.batch_size)?;
        if !tr.loss.is_finite() {
            return Err(Error::NonFiniteLoss(0));
        }
        let record = EpochRecord {
            epoch,
            train_loss: tr.loss,
            train_acc: tr.accuracy,
            val_loss: va.loss,
            val_acc: va.accuracy,
        };
        if best_val_acc.is_none_or(|b| va.accuracy > b) {
            best_val_acc = Some(va.accuracy);
            best_epoch = Some(epoch);
            best = model.clone();
        }
        on_epoch(&record);
        history.push(record);
    }
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_val_acc,
        history,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub best_val_acc: Option<f64>,
    pub best_epoch: Option<usize>,
    pub test: EvalReport,
    pub history: Vec<EpochRecord>,
    pub split_sizes: [usize; 3],
}

/// Test metrics averaged over folds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanMetrics {
    #[serde(rename = "Accuracy")]
    pub accuracy: f64,
    #[serde(rename = "Precision")]
    pub precision: f64,
    #[serde(rename = "Recall")]
    pub recall: f64,
    #[serde(rename = "F1 score")]
    pub f1: f64,
}

impl MeanMetrics {
    pub fn of(folds: &[FoldResult]) -> Self {
        let n = folds.len().max(1) as f64;
        let mean = |f: fn(&FoldResult) -> f64| folds.iter().map(f).sum::<f64>() / n;
        MeanMetrics {
            accuracy: mean(|r| r.test.report.accuracy),
            precision: mean(|r| r.test.report.macro_precision),
            recall: mean(|r| r.test.report.macro_recall),
            f1: mean(|r| r.test.report.macro_f1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossValidation {
    pub mean: MeanMetrics,
    pub folds: Vec<FoldResult>,
}

/// `cfg.folds` independent stratified re-splits with seeds `seed + f`. Each
/// fold builds a fresh model with `make_model`, trains, and is evaluated on
/// its test split with the best-validation snapshot.
pub fn cross_validate(
    examples: &[Example],
    classes: usize,
    cfg: &TrainConfig,
    mut make_model: impl FnMut(usize, &mut Rng) -> Result<Model>,
    mut on_epoch: impl FnMut(usize, &EpochRecord),
    mut on_fold: impl FnMut(&FoldResult, &Model) -> Result<()>,
) -> Result<CrossValidation> {
    cfg.validate()?;
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    let mut folds = Vec::with_capacity(cfg.folds);
    for fold in 0..cfg.folds {
        let seed = cfg.seed.wrapping_add(fold as u64);
        let split = split_stratified(&labels, classes, cfg.split, seed)?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
        let (train_set, val_set, test_set) =
            (pick(&split.train), pick(&split.val), pick(&split.test));
        let mut rng = Rng::new(seed);
        let model = make_model(fold, &mut rng.fork())?;
        let outcome = train(model, &train_set, &val_set, cfg, &mut rng, |r| {
            on_epoch(fold, r)
        })?;
        let test_eval = evaluate_examples(&outcome.best, &test_set, cfg.batch_size)?;
        let targets: Vec<usize> = test_set.iter().map(|e| e.label).collect();
        let result = FoldResult {
            fold,
            best_val_acc: outcome.best_val_acc,
            best_epoch: outcome.best_epoch,
            test: evaluate(&test_eval.probs, &targets)?,
            history: outcome.history,
            split_sizes: [split.train.len(), split.val.len(), split.test.len()],
        };
        on_fold(&result, &outcome.best)?;
        folds.push(result);
    }
    Ok(CrossValidation {
        mean: MeanMetrics::of(&folds),
        folds,
    })
}
