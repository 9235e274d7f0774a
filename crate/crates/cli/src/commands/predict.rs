use std::collections::BTreeMap;

use macbig::model::{AttentionTrace, Model, LABELS};
use macbig::text::{Pipeline, TokenizedDoc, Vocabulary};
use macbig::Rng;
use serde::Serialize;

use super::load_model;
use crate::config::CliConfig;
use crate::failure::Failure;

/// Cleans and tensorizes `text`, then runs inference. Text that cleans to
/// nothing is still classified, from an all-padding grid, with a warning.
pub(crate) fn analyze(
    model: &Model,
    vocab: &Vocabulary,
    pipeline: &Pipeline,
    text: &str,
) -> Result<(TokenizedDoc, AttentionTrace), Failure> {
    let doc = pipeline.vectorize(text, vocab, model.hp.max_sentences, model.hp.max_tokens);
    if doc.empty {
        eprintln!("warning: text is empty after cleaning; predicting on an all-padding input");
    }
    let (_, mut trace) = model.forward(&doc.grid, false, &mut Rng::new(0))?;
    trace.tokens = doc.sentences.clone();
    Ok((doc, trace))
}

#[derive(Serialize)]
struct PredictionOutput<'a> {
    label: &'a str,
    probabilities: BTreeMap<&'a str, f64>,
    empty_after_cleaning: bool,
}

pub fn run(cfg: &CliConfig, text: &str, json: bool) -> Result<(), Failure> {
    let (model, vocab) = load_model(cfg)?;
    let (doc, trace) = analyze(&model, &vocab, &cfg.pipeline()?, text)?;
    let label = LABELS[trace.predicted];
    if json {
        let out = PredictionOutput {
            label,
            probabilities: LABELS
                .iter()
                .copied()
                .zip(trace.probabilities.iter().map(|&p| p as f64))
                .collect(),
            empty_after_cleaning: doc.empty,
        };
        println!(
            "{}",
            serde_json::to_string(&out).expect("prediction serializes")
        );
    } else {
        println!("{label}");
        for (name, p) in LABELS.iter().zip(&trace.probabilities) {
            println!("{name:<9} {p:.6}");
        }
    }
    Ok(())
}
