use std::fmt::Write as _;

use serde::Serialize;

use super::{EncoderShapes, Model};
use crate::error::Result;
use crate::nn::Parameters;

/// Footnote attached to the recurrent rows, whose count differs from the
/// reference layer table by construction.
pub const BIGRU_NOTE: &str =
    "GRU has three gates: 2·3·(C·H + H² + H) = 137,400 per level for C=128, H=100. \
The reference figure 183,200 is the four-gate (LSTM) count 2·4·(C·H + H² + H); \
the word-level total differs by the same 45,800.";

/// Reference output shape (without the batch axis) and parameter count per
/// layer, for the default hyperparameters and an 18,352-word vocabulary.
const WORD_REFERENCE: &[(&str, &[usize], usize)] = &[
    ("Input", &[200], 0),
    ("Embedding", &[200, 100], 1_835_200),
    ("Conv1D_1", &[198, 128], 38_528),
    ("Conv1D_2", &[197, 128], 51_328),
    ("Conv1D_3", &[196, 128], 64_128),
    ("MaxPooling1D_1", &[66, 128], 0),
    ("MaxPooling1D_2", &[65, 128], 0),
    ("MaxPooling1D_3", &[65, 128], 0),
    ("Concatenate", &[196, 128], 0),
    ("MaxPooling1D_4", &[65, 128], 0),
    ("Bidirectional_GRU", &[65, 200], 183_200),
    ("TimeDistributed (Dense)", &[65, 100], 20_100),
    ("Attention", &[100], 10_200),
];

const SENTENCE_REFERENCE: &[(&str, &[usize], usize)] = &[
    ("Input", &[15, 200], 0),
    ("TimeDistributed (Model)", &[15, 100], 2_202_684),
    ("Conv1D_1", &[13, 128], 38_528),
    ("Conv1D_2", &[12, 128], 51_328),
    ("Conv1D_3", &[11, 128], 64_128),
    ("MaxPooling1D_1", &[4, 128], 0),
    ("MaxPooling1D_2", &[4, 128], 0),
    ("MaxPooling1D_3", &[3, 128], 0),
    ("Concatenate", &[11, 128], 0),
    ("MaxPooling1D_4", &[3, 128], 0),
    ("Bidirectional_GRU", &[3, 200], 183_200),
    ("TimeDistributed (Dense)", &[3, 100], 20_100),
    ("Attention", &[100], 10_200),
    ("Dropout", &[100], 0),
    ("Dense", &[3], 303),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    pub level: String,
    pub layer: String,
    pub shape: Vec<usize>,
    pub params: usize,
    pub reference_shape: Option<Vec<usize>>,
    pub reference_params: Option<usize>,
    /// Divergence explained by [`BIGRU_NOTE`].
    pub footnote: bool,
}

impl ReportRow {
    pub fn shape_matches(&self) -> Option<bool> {
        self.reference_shape.as_ref().map(|s| *s == self.shape)
    }

    pub fn params_match(&self) -> Option<bool> {
        self.reference_params.map(|p| p == self.params)
    }

    pub fn matches(&self) -> Option<bool> {
        Some(self.shape_matches()? && self.params_match()?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParameterReport {
    pub rows: Vec<ReportRow>,
    pub word_total: usize,
    pub sentence_total: usize,
    pub total: usize,
}

impl ParameterReport {
    pub fn row(&self, level: &str, layer: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.level == level && r.layer == layer)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<9} {:<24} {:<12} {:>12} {:>12}  ok",
            "level", "layer", "shape", "params", "reference"
        );
        for r in &self.rows {
            let shape = format!(
                "({})",
                r.shape
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            let reference = r.reference_params.map(group).unwrap_or_else(|| "-".into());
            let mark = match r.matches() {
                Some(true) => "✓",
                Some(false) => "✗",
                None => "-",
            };
            let note = if r.footnote { " *" } else { "" };
            let _ = writeln!(
                out,
                "{:<9} {:<24} {:<12} {:>12} {:>12}  {mark}{note}",
                r.level,
                r.layer,
                shape,
                group(r.params),
                reference
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "word-level total:     {}", group(self.word_total));
        let _ = writeln!(out, "sentence-level total: {}", group(self.sentence_total));
        let _ = writeln!(out, "total:                {}", group(self.total));
        let _ = writeln!(out);
        let _ = writeln!(out, "* {BIGRU_NOTE}");
        out
    }
}

/// `1835200` → `1,835,200`.
fn group(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn encoder_rows(
    shapes: &EncoderShapes,
    counts: &EncoderCounts,
    rows: &mut Vec<(String, Vec<usize>, usize)>,
) {
    for (i, s) in shapes.conv.iter().enumerate() {
        rows.push((format!("Conv1D_{}", i + 1), s.clone(), counts.convs[i]));
    }
    for (i, s) in shapes.pool.iter().enumerate() {
        rows.push((format!("MaxPooling1D_{}", i + 1), s.clone(), 0));
    }
    rows.push(("Concatenate".into(), shapes.concat.clone(), 0));
    rows.push((
        format!("MaxPooling1D_{}", shapes.pool.len() + 1),
        shapes.merge_pool.clone(),
        0,
    ));
    rows.push((
        "Bidirectional_GRU".into(),
        shapes.bigru.clone(),
        counts.bigru,
    ));
    rows.push((
        "TimeDistributed (Dense)".into(),
        shapes.dense.clone(),
        counts.dense,
    ));
    rows.push((
        "Attention".into(),
        shapes.attention.clone(),
        counts.attention,
    ));
}

struct EncoderCounts {
    convs: Vec<usize>,
    bigru: usize,
    dense: usize,
    attention: usize,
}

fn counts(enc: &super::Encoder) -> EncoderCounts {
    EncoderCounts {
        convs: enc.convs.iter().map(Parameters::parameter_count).collect(),
        bigru: enc.gru_fwd.parameter_count() + enc.gru_bwd.parameter_count(),
        dense: enc.dense.parameter_count(),
        attention: enc.attention.parameter_count(),
    }
}

fn attach(
    level: &str,
    raw: Vec<(String, Vec<usize>, usize)>,
    reference: &[(&str, &[usize], usize)],
) -> Vec<ReportRow> {
    raw.into_iter()
        .map(|(layer, shape, params)| {
            let found = reference.iter().find(|(name, _, _)| *name == layer);
            ReportRow {
                level: level.to_string(),
                footnote: layer == "Bidirectional_GRU" || layer == "TimeDistributed (Model)",
                reference_shape: found.map(|(_, s, _)| s.to_vec()),
                reference_params: found.map(|(_, _, p)| *p),
                layer,
                shape,
                params,
            }
        })
        .collect()
}

/// Per-layer output shapes (from a real forward pass) and parameter counts,
/// side by side with the reference layer tables.
pub fn parameter_report(model: &Model) -> Result<ParameterReport> {
    let trace = model.shape_trace()?;
    let word_counts = counts(&model.word);
    let sentence_counts = counts(&model.sentence);
    let embedding = model.embedding.len();
    let word_total = embedding + model.word.parameter_count();

    let mut word = vec![
        ("Input".to_string(), trace.word_input.clone(), 0),
        ("Embedding".to_string(), trace.embedding.clone(), embedding),
    ];
    encoder_rows(&trace.word, &word_counts, &mut word);

    let mut sentence = vec![
        ("Input".to_string(), trace.doc_input.clone(), 0),
        (
            "TimeDistributed (Model)".to_string(),
            trace.sentence_vectors.clone(),
            word_total,
        ),
    ];
    encoder_rows(&trace.sentence, &sentence_counts, &mut sentence);
    sentence.push(("Dropout".into(), trace.dropout.clone(), 0));
    sentence.push((
        "Dense".into(),
        trace.output.clone(),
        model.output.parameter_count(),
    ));

    let mut rows = attach("word", word, WORD_REFERENCE);
    rows.extend(attach("sentence", sentence, SENTENCE_REFERENCE));
    let sentence_total = model.sentence.parameter_count() + model.output.parameter_count();
    Ok(ParameterReport {
        rows,
        word_total,
        sentence_total,
        total: model.parameter_count(),
    })
}
