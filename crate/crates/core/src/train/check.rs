use super::loss::{
    backprop_batch, cross_entropy, regularized_cost, squared_norm, L2Scope, Regularization,
};
use crate::error::Result;
use crate::model::{HyperParams, Model, PAD_INDEX};
use crate::nn::gradcheck::{grad_check_piecewise, GradCheckConfig, GradCheckReport, LayerCheck};
use crate::nn::{ParamKind, Parameters};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Mean regularized cost of a batch with dropout drawn from `rng`.
pub fn batch_cost(
    model: &Model,
    docs: &[&[u32]],
    labels: &[usize],
    reg: Regularization,
    rng: &mut Rng,
) -> Result<f64> {
    Ok(batch_cost_with_pattern(model, docs, labels, reg, rng)?.0)
}

fn batch_cost_with_pattern(
    model: &Model,
    docs: &[&[u32]],
    labels: &[usize],
    reg: Regularization,
    rng: &mut Rng,
) -> Result<(f64, u64)> {
    let pass = model.forward_batch(docs, true, rng)?;
    let loss = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| cross_entropy(pass.probs(i).data(), l))
        .sum::<f64>()
        / docs.len() as f64;
    let cost = regularized_cost(loss, squared_norm(model, reg.scope), reg.lambda, docs.len());
    Ok((cost, pass.activation_pattern(model)))
}

/// Checks the gradient of the full regularized batch cost with respect to
/// every parameter tensor, skipping coordinates whose perturbation crosses a
/// ReLU or max-pool kink. The dropout mask is held fixed by reseeding with
/// `dropout_seed` for every evaluation. The padding row of the embedding is
/// excluded because its update is suppressed by design.
pub fn model_grad_check(
    model: &Model,
    docs: &[&[u32]],
    labels: &[usize],
    reg: Regularization,
    dropout_seed: u64,
    cfg: &GradCheckConfig,
) -> Result<Vec<LayerCheck>> {
    let analytic = backprop_batch(model, docs, labels, reg, &mut Rng::new(dropout_seed))?.grads;
    let cost = |m: &Model| {
        batch_cost_with_pattern(m, docs, labels, reg, &mut Rng::new(dropout_seed))
            .unwrap_or((f64::NAN, 0))
    };
    let mut checks = Vec::new();
    let params = model.params();
    let grads = analytic.params();
    for (pi, (name, _, base)) in params.iter().enumerate() {
        let grad = grads[pi].2;
        let report: GradCheckReport = if name == "embedding" {
            let pad = PAD_INDEX as usize;
            let rows: Vec<usize> = (0..base.rows()).filter(|&r| r != pad).collect();
            let take = |t: &Tensor| {
                let data = rows.iter().flat_map(|&r| t.row(r).to_vec()).collect();
                Tensor::new(vec![rows.len(), t.cols()], data).unwrap()
            };
            grad_check_piecewise(
                |p| {
                    let mut m = model.clone();
                    for (k, &r) in rows.iter().enumerate() {
                        m.embedding.row_mut(r).copy_from_slice(p.row(k));
                    }
                    cost(&m)
                },
                &take(base),
                &take(grad),
                cfg,
            )
        } else {
            grad_check_piecewise(
                |p| {
                    let mut m = model.clone();
                    *m.params_mut()[pi].2 = p.clone();
                    cost(&m)
                },
                base,
                grad,
                cfg,
            )
        };
        checks.push(LayerCheck {
            layer: name.clone(),
            report,
        });
    }
    Ok(checks)
}

/// End-to-end check of a tiny model on three random documents with padding,
/// a fixed dropout mask and a nonzero penalty.
///
/// Biases start at zero and padding embeds to zero, so at initialization every
/// ReLU on a padded row sits exactly on its kink and central differences
/// straddle it. The biases are therefore moved to random nonzero values first.
pub fn tiny_model_check(seed: u64, cfg: &GradCheckConfig) -> Result<Vec<LayerCheck>> {
    let hp = HyperParams::tiny();
    let vocab = 20;
    let mut rng = Rng::new(seed);
    let mut model = Model::new(hp.clone(), vocab, &mut rng)?;
    for (_, kind, t) in model.params_mut() {
        if kind == ParamKind::Bias {
            t.data_mut()
                .iter_mut()
                .for_each(|b| *b = rng.uniform(-0.2, 0.2));
        }
    }
    let mut docs = Vec::new();
    for d in 0..3 {
        let mut doc = vec![PAD_INDEX; hp.doc_len()];
        // Later documents have fewer sentences and shorter ones.
        for s in 0..hp.max_sentences - d {
            for t in 0..hp.max_tokens - s % 3 {
                doc[s * hp.max_tokens + t] = 1 + rng.below(vocab as u64 - 1) as u32;
            }
        }
        docs.push(doc);
    }
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    let labels = [0, 1, 2];
    let reg = Regularization {
        lambda: 0.05,
        scope: L2Scope::Weights,
    };
    model_grad_check(&model, &refs, &labels, reg, seed.wrapping_add(1), cfg)
}
