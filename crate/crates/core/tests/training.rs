use macbig::model::{HyperParams, Model, PAD_INDEX};
use macbig::nn::gradcheck::GradCheckConfig;
use macbig::nn::{ParamKind, Parameters};
use macbig::train::{
    adam_step, backprop_batch, batch_cost, cross_validate, evaluate_examples, history_csv,
    tiny_model_check, train, AdamConfig, AdamState, Example, L2Scope, Regularization, TrainConfig,
};
use macbig::{Error, Float, Rng};

const VOCAB: usize = 20;

fn tiny(seed: u64, dropout: Float) -> Model {
    let hp = HyperParams {
        dropout,
        ..HyperParams::tiny()
    };
    Model::new(hp, VOCAB, &mut Rng::new(seed)).unwrap()
}

fn random_doc(rng: &mut Rng, sentences: usize) -> Vec<u32> {
    let hp = HyperParams::tiny();
    let mut doc = vec![PAD_INDEX; hp.doc_len()];
    for s in 0..sentences {
        let len = 2 + rng.below(hp.max_tokens as u64 - 1) as usize;
        for t in 0..len {
            doc[s * hp.max_tokens + t] = 1 + rng.below(VOCAB as u64 - 1) as u32;
        }
    }
    doc
}

/// Class-dependent token ranges make the label recoverable from the text.
fn separable_examples(n: usize, seed: u64) -> Vec<Example> {
    let hp = HyperParams::tiny();
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|i| {
            let label = i % 3;
            let mut tokens = vec![PAD_INDEX; hp.doc_len()];
            for s in 0..3 {
                for t in 0..5 {
                    tokens[s * hp.max_tokens + t] = 2 + (label * 6) as u32 + rng.below(6) as u32;
                }
            }
            Example { tokens, label }
        })
        .collect()
}

fn no_reg() -> Regularization {
    Regularization {
        lambda: 0.0,
        scope: L2Scope::Weights,
    }
}

#[test]
fn tiny_model_gradients_match_finite_differences() {
    let cfg = GradCheckConfig::default();
    for seed in [1u64, 2, 3] {
        let checks = tiny_model_check(seed, &cfg).unwrap();
        let checked: usize = checks.iter().map(|c| c.report.checked).sum();
        let skipped: usize = checks.iter().map(|c| c.report.skipped).sum();
        for c in &checks {
            assert!(
                c.report.passed,
                "seed {seed} {}: rel err {:.3e} (analytic {:.4e}, numeric {:.4e})",
                c.layer, c.report.max_rel_error, c.report.analytic, c.report.numeric
            );
        }
        let worst = checks
            .iter()
            .map(|c| c.report.max_rel_error)
            .fold(0.0, f64::max);
        println!("tiny model seed {seed}: {checked} coordinates, {skipped} on kinks, max rel err {worst:.2e}");
        assert!(worst < 1e-3);
        assert!(
            skipped * 5 < checked,
            "seed {seed}: {skipped} of {} coordinates skipped",
            checked + skipped
        );
    }
}

#[test]
fn duplicated_sample_has_the_same_mean_gradient() {
    let model = tiny(4, 0.0);
    let doc = random_doc(&mut Rng::new(9), 4);
    let single = backprop_batch(&model, &[&doc], &[1], no_reg(), &mut Rng::new(0)).unwrap();
    let double =
        backprop_batch(&model, &[&doc, &doc], &[1, 1], no_reg(), &mut Rng::new(0)).unwrap();
    assert!((single.cost - double.cost).abs() < 1e-6);
    for ((name, _, a), (_, _, b)) in single.grads.params().into_iter().zip(double.grads.params()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-6 + 1e-4 * x.abs(), "{name}: {x} vs {y}");
        }
    }
}

#[test]
fn penalty_adds_lambda_over_m_times_weights() {
    let model = tiny(5, 0.5);
    let mut rng = Rng::new(1);
    let docs: Vec<Vec<u32>> = (0..4).map(|i| random_doc(&mut rng, 2 + i)).collect();
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    let labels = [0, 1, 2, 0];
    let lambda = 0.3;
    let plain = backprop_batch(&model, &refs, &labels, no_reg(), &mut Rng::new(7)).unwrap();
    let reg = Regularization {
        lambda,
        scope: L2Scope::Weights,
    };
    let penalized = backprop_batch(&model, &refs, &labels, reg, &mut Rng::new(7)).unwrap();
    let coeff = lambda / refs.len() as f64;
    let mut norm = 0.0;
    let pairs = plain
        .grads
        .params()
        .into_iter()
        .zip(penalized.grads.params());
    for (((name, kind, g0), (_, _, g1)), (_, _, w)) in pairs.zip(model.params()) {
        let weighted = kind == ParamKind::Weight;
        if weighted {
            norm += w.sum_squares();
        }
        for ((a, b), wi) in g0.data().iter().zip(g1.data()).zip(w.data()) {
            let expected = if weighted { coeff * *wi as f64 } else { 0.0 };
            assert!(((b - a) as f64 - expected).abs() < 1e-6, "{name}");
        }
    }
    assert_eq!(plain.loss, penalized.loss);
    let expected_cost = plain.loss + lambda / (2.0 * refs.len() as f64) * norm;
    assert!((penalized.cost - expected_cost).abs() < 1e-9);
}

#[test]
fn padding_row_and_frozen_embedding_get_no_update() {
    let doc = random_doc(&mut Rng::new(2), 3);
    let model = tiny(6, 0.0);
    let g = backprop_batch(&model, &[&doc], &[2], no_reg(), &mut Rng::new(0)).unwrap();
    assert!(g
        .grads
        .embedding
        .row(PAD_INDEX as usize)
        .iter()
        .all(|&v| v == 0.0));
    assert!(g.grads.embedding.max_abs() > 0.0);

    let mut frozen = model.clone();
    frozen.hp.freeze_embedding = true;
    let g = backprop_batch(&frozen, &[&doc], &[2], no_reg(), &mut Rng::new(0)).unwrap();
    assert_eq!(g.grads.embedding.max_abs(), 0.0);
}

#[test]
fn fifty_adam_steps_reduce_the_cost() {
    let mut model = tiny(8, 0.5);
    let mut rng = Rng::new(3);
    let docs: Vec<Vec<u32>> = (0..6).map(|i| random_doc(&mut rng, 1 + i % 5)).collect();
    let refs: Vec<&[u32]> = docs.iter().map(Vec::as_slice).collect();
    let labels = [0, 1, 2, 0, 1, 2];
    let reg = Regularization {
        lambda: 1e-3,
        scope: L2Scope::Weights,
    };
    let cfg = AdamConfig {
        lr: 1e-2,
        ..AdamConfig::default()
    };
    let initial = batch_cost(&model, &refs, &labels, reg, &mut Rng::new(0)).unwrap();
    let mut state = AdamState::new(&model);
    let mut dropout_rng = Rng::new(11);
    for _ in 0..50 {
        let g = backprop_batch(&model, &refs, &labels, reg, &mut dropout_rng).unwrap();
        adam_step(&mut model, &g.grads, &mut state, &cfg).unwrap();
    }
    let last = batch_cost(&model, &refs, &labels, reg, &mut Rng::new(0)).unwrap();
    assert!(last < initial, "{initial} -> {last}");
    assert_eq!(state.step, 50);
}

fn quick_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-2,
        batch_size: 8,
        epochs,
        folds: 2,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_epochs_returns_the_initial_model() {
    let data = separable_examples(12, 0);
    let model = tiny(1, 0.5);
    let out = train(
        model.clone(),
        &data[..9],
        &data[9..],
        &quick_config(0),
        &mut Rng::new(0),
        |_| {},
    )
    .unwrap();
    assert_eq!(out.best, model);
    assert!(out.history.is_empty());
    assert_eq!(out.best_epoch, None);
}

#[test]
fn training_is_deterministic_and_keeps_the_best_epoch() {
    let data = separable_examples(30, 1);
    let (train_set, val_set) = data.split_at(24);
    let cfg = quick_config(15);
    let run = || {
        let mut seen = Vec::new();
        let out = train(
            tiny(2, 0.5),
            train_set,
            val_set,
            &cfg,
            &mut Rng::new(3),
            |r| seen.push(r.epoch),
        )
        .unwrap();
        (out, seen)
    };
    let (a, seen) = run();
    let (b, _) = run();
    assert_eq!(seen, (1..=15).collect::<Vec<_>>());
    assert_eq!(history_csv(&a.history), history_csv(&b.history));
    assert_eq!(a.best, b.best);

    let best_acc = a.history.iter().map(|r| r.val_acc).fold(f64::MIN, f64::max);
    let first_best = a
        .history
        .iter()
        .find(|r| r.val_acc == best_acc)
        .unwrap()
        .epoch;
    assert_eq!(a.best_epoch, Some(first_best));
    assert_eq!(a.best_val_acc, Some(best_acc));
    let reevaluated = evaluate_examples(&a.best, val_set, 4).unwrap();
    assert_eq!(reevaluated.accuracy, best_acc);

    let first = a.history.first().unwrap().train_loss;
    let last = a.history.last().unwrap().train_loss;
    assert!(last < first, "{first} -> {last}");
}

#[test]
fn history_csv_has_a_header_and_one_row_per_epoch() {
    let data = separable_examples(9, 2);
    let out = train(
        tiny(3, 0.5),
        &data[..6],
        &data[6..],
        &quick_config(3),
        &mut Rng::new(0),
        |_| {},
    )
    .unwrap();
    let csv = history_csv(&out.history);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,train_acc,val_loss,val_acc");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3,"));
}

#[test]
fn evaluation_agrees_with_single_document_prediction() {
    let data = separable_examples(10, 3);
    let model = tiny(4, 0.5);
    let eval = evaluate_examples(&model, &data, 3).unwrap();
    let mut correct = 0;
    for (ex, probs) in data.iter().zip(&eval.probs) {
        let predicted = model.predict(&ex.tokens).unwrap();
        assert_eq!(predicted, macbig::tensor::argmax(probs));
        correct += usize::from(predicted == ex.label);
    }
    assert_eq!(eval.accuracy, correct as f64 / data.len() as f64);
    assert!(matches!(
        evaluate_examples(&model, &[], 3),
        Err(Error::NoSamples)
    ));
}

#[test]
fn non_finite_loss_names_the_dataset_sample() {
    let mut data = separable_examples(6, 4);
    let poison = 1u32;
    data[4].tokens[0] = poison;
    let mut model = tiny(5, 0.5);
    model.embedding.row_mut(poison as usize).fill(Float::NAN);
    let cfg = TrainConfig {
        batch_size: 2,
        ..quick_config(1)
    };
    let err = train(model, &data, &data[..2], &cfg, &mut Rng::new(0), |_| {}).unwrap_err();
    assert!(matches!(err, Error::NonFiniteLoss(4)), "{err:?}");
}

#[test]
fn cross_validation_runs_every_fold_with_its_own_seed() {
    let data = separable_examples(30, 5);
    let cfg = TrainConfig {
        split: [0.6, 0.2, 0.2],
        ..quick_config(2)
    };
    let mut fold_seeds = Vec::new();
    let mut saved = Vec::new();
    let cv = cross_validate(
        &data,
        3,
        &cfg,
        |fold, rng| {
            fold_seeds.push(fold);
            Model::new(HyperParams::tiny(), VOCAB, rng)
        },
        |_, _| {},
        |result, _| {
            saved.push(result.fold);
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(fold_seeds, [0, 1]);
    assert_eq!(saved, [0, 1]);
    assert_eq!(cv.folds.len(), 2);
    for f in &cv.folds {
        assert_eq!(f.split_sizes, [18, 6, 6]);
        assert_eq!(f.test.samples, 6);
        assert_eq!(f.history.len(), 2);
    }
    let mean_acc = cv.folds.iter().map(|f| f.test.report.accuracy).sum::<f64>() / 2.0;
    assert!((cv.mean.accuracy - mean_acc).abs() < 1e-12);
    let json = serde_json::to_value(cv.mean).unwrap();
    for key in ["Accuracy", "Precision", "Recall", "F1 score"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
