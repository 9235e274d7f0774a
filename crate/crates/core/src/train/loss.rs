use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::nn::{ParamKind, Parameters};
use crate::rng::Rng;
use crate::tensor::{Float, Tensor};

/// Lower clip on the target probability inside the log.
pub const PROB_FLOOR: Float = 1e-7;

/// `−ln(clip(p[target], 1e-7, 1))`.
pub fn cross_entropy(probs: &[Float], target: usize) -> f64 {
    let p = probs[target].clamp(PROB_FLOOR, 1.0);
    -(p as f64).ln()
}

/// `d cross_entropy / d probs`; zero where the clip is active.
pub fn cross_entropy_grad(probs: &[Float], target: usize) -> Tensor {
    let mut g = Tensor::zeros(&[probs.len()]);
    let p = probs[target];
    if p > PROB_FLOOR && p <= 1.0 {
        g.data_mut()[target] = -1.0 / p;
    }
    g
}

/// Which parameter tensors the L2 penalty covers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Scope {
    /// Conv, recurrent, dense and attention projection matrices.
    #[default]
    Weights,
    /// The above plus the embedding matrix.
    WeightsAndEmbedding,
    /// Every parameter tensor.
    All,
    None,
}

impl L2Scope {
    pub fn covers(self, kind: ParamKind) -> bool {
        match self {
            L2Scope::Weights => kind == ParamKind::Weight,
            L2Scope::WeightsAndEmbedding => {
                matches!(kind, ParamKind::Weight | ParamKind::Embedding)
            }
            L2Scope::All => true,
            L2Scope::None => false,
        }
    }
}

/// `Σ‖w‖²` over the tensors in scope.
pub fn squared_norm<P: Parameters>(params: &P, scope: L2Scope) -> f64 {
    params
        .params()
        .into_iter()
        .filter(|(_, kind, _)| scope.covers(*kind))
        .map(|(_, _, t)| t.sum_squares())
        .sum()
}

/// `loss + λ/(2m)·Σ‖w‖²`.
pub fn regularized_cost(loss: f64, squared_norm: f64, lambda: f64, batch_size: usize) -> f64 {
    loss + lambda / (2.0 * batch_size as f64) * squared_norm
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularization {
    pub lambda: f64,
    pub scope: L2Scope,
}

#[derive(Clone, Debug)]
pub struct BatchGradient {
    pub cost: f64,
    /// Mean cross-entropy without the penalty.
    pub loss: f64,
    pub grads: Model,
    pub probs: Vec<Tensor>,
}

/// Mean regularized cost over a batch and its gradient for every parameter.
/// Dropout masks are drawn from `rng`, one per document in batch order.
pub fn backprop_batch(
    model: &Model,
    docs: &[&[u32]],
    labels: &[usize],
    reg: Regularization,
    rng: &mut Rng,
) -> Result<BatchGradient> {
    if docs.is_empty() {
        return Err(Error::NoSamples);
    }
    if docs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} documents, {} labels",
            docs.len(),
            labels.len()
        )));
    }
    let m = docs.len();
    let pass = model.forward_batch(docs, true, rng)?;
    let mut loss = 0.0;
    let mut dprobs = Vec::with_capacity(m);
    for (i, &label) in labels.iter().enumerate() {
        let p = pass.probs(i).data();
        if label >= p.len() {
            return Err(Error::invalid(format!(
                "label {label} outside 0..{}",
                p.len()
            )));
        }
        let l = cross_entropy(p, label);
        if !l.is_finite() || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss(i));
        }
        loss += l;
        let mut g = cross_entropy_grad(p, label);
        g.scale(1.0 / m as Float);
        dprobs.push(g);
    }
    loss /= m as f64;

    let mut grads = model.zeros_like();
    model.backward_batch(&pass, &dprobs, &mut grads)?;

    let coeff = (reg.lambda / m as f64) as Float;
    let mut norm = 0.0;
    for ((_, kind, w), (_, _, g)) in model.params().into_iter().zip(grads.params_mut()) {
        if reg.scope.covers(kind) {
            norm += w.sum_squares();
            if coeff != 0.0 {
                g.add_scaled(coeff, w);
            }
        }
    }
    if model.hp.freeze_embedding {
        grads.embedding.fill(0.0);
    } else {
        grads
            .embedding
            .row_mut(crate::model::PAD_INDEX as usize)
            .fill(0.0);
    }
    let probs = (0..m).map(|i| pass.probs(i).clone()).collect();
    Ok(BatchGradient {
        cost: regularized_cost(loss, norm, reg.lambda, m),
        loss,
        grads,
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[0.0, 1.0, 0.0], 1), 0.0);
        assert!((cross_entropy(&[1.0 / 3.0; 3], 2) - 3f64.ln()).abs() < 1e-6);
        assert!((cross_entropy(&[0.5, 0.5, 0.0], 2) - 16.118_095_65).abs() < 1e-4);
        assert_eq!(
            cross_entropy_grad(&[0.5, 0.5, 0.0], 2).data(),
            &[0.0, 0.0, 0.0]
        );
        assert_eq!(
            cross_entropy_grad(&[0.5, 0.25, 0.25], 1).data(),
            &[0.0, -4.0, 0.0]
        );
    }

    #[test]
    fn cost_arithmetic() {
        assert_eq!(regularized_cost(0.7, 123.0, 0.0, 4), 0.7);
        assert!((regularized_cost(1.0, 200.0, 0.001, 1) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn scope_membership() {
        assert!(L2Scope::Weights.covers(ParamKind::Weight));
        assert!(!L2Scope::Weights.covers(ParamKind::Bias));
        assert!(!L2Scope::Weights.covers(ParamKind::Context));
        assert!(!L2Scope::Weights.covers(ParamKind::Embedding));
        assert!(L2Scope::WeightsAndEmbedding.covers(ParamKind::Embedding));
        assert!(L2Scope::All.covers(ParamKind::Context));
        assert!(!L2Scope::None.covers(ParamKind::Weight));
    }
}
