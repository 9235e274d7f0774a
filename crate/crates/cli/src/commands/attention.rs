use std::path::Path;

use macbig::model::LABELS;
use serde::{Deserialize, Serialize};

use super::predict::analyze;
use super::{load_model, to_json, write};
use crate::config::CliConfig;
use crate::failure::Failure;
use crate::html;

/// Attention for one text. Word and sentence weights are per encoded
/// position; the saliency fields spread them back over tokens and sentences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionExport {
    pub text: String,
    pub prediction: String,
    /// In label order: negative, neutral, positive.
    pub probabilities: Vec<f64>,
    pub empty_after_cleaning: bool,
    pub sentences: Vec<SentenceAttention>,
    pub sentence_weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceAttention {
    pub tokens: Vec<String>,
    pub saliency: f64,
    pub word_weights: Vec<f64>,
    pub token_saliency: Vec<f64>,
}

fn widen(values: &[macbig::Float]) -> Vec<f64> {
    values.iter().map(|&v| v as f64).collect()
}

pub fn run(
    cfg: &CliConfig,
    text: &str,
    out_json: &Path,
    out_html: Option<&Path>,
) -> Result<(), Failure> {
    let (model, vocab) = load_model(cfg)?;
    let (doc, trace) = analyze(&model, &vocab, &cfg.pipeline()?, text)?;
    let rows = model.sentence_saliency(&trace.sentence_weights, doc.sentences.len())?;
    let sentences = doc
        .sentences
        .iter()
        .zip(&trace.word_weights)
        .zip(rows)
        .map(|((tokens, weights), saliency)| {
            Ok(SentenceAttention {
                tokens: tokens.clone(),
                saliency: saliency as f64,
                word_weights: widen(weights),
                token_saliency: widen(&model.token_saliency(weights, tokens.len())?),
            })
        })
        .collect::<Result<Vec<_>, macbig::Error>>()?;
    let export = AttentionExport {
        text: text.to_string(),
        prediction: LABELS[trace.predicted].to_string(),
        probabilities: widen(&trace.probabilities),
        empty_after_cleaning: doc.empty,
        sentences,
        sentence_weights: widen(&trace.sentence_weights),
    };
    write(out_json, to_json(&export))?;
    if let Some(path) = out_html {
        write(path, html::render(&export))?;
    }
    println!("{}", export.prediction);
    Ok(())
}
