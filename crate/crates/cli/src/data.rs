//! Cleaned corpora: building them from raw JSON Lines and reading them back
//! from a preprocessing directory.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use macbig::model::{HyperParams, LABELS};
use macbig::text::{build_vocab, load_jsonl, tokens_to_grid, Pipeline, Vocabulary};
use macbig::train::Example;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const SUMMARY_FILE: &str = "summary.json";

/// One cleaned record: its position in the input, class and token lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleanRecord {
    pub id: usize,
    pub label: String,
    pub sentences: Vec<Vec<String>>,
}

impl CleanRecord {
    pub fn class(&self) -> usize {
        LABELS
            .iter()
            .position(|&l| l == self.label)
            .unwrap_or(usize::MAX)
    }
}

/// A cleaned corpus and, when read from a preprocessing directory, the
/// vocabulary stored with it.
pub struct Corpus {
    pub records: Vec<CleanRecord>,
    pub vocab: Option<Vocabulary>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub records: usize,
    pub per_class: BTreeMap<String, usize>,
    pub vocab_size: usize,
    pub tokens: usize,
    pub oov_tokens: usize,
    pub oov_rate: f64,
    pub empty_after_cleaning: usize,
}

pub fn clean_records(path: &Path, pipeline: &Pipeline) -> Result<Vec<CleanRecord>, Failure> {
    let raw = load_jsonl(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(raw
        .iter()
        .enumerate()
        .map(|(id, r)| CleanRecord {
            id,
            label: LABELS[r.label].to_string(),
            sentences: pipeline.sentences(&r.text),
        })
        .collect())
}

/// Reads a raw JSON Lines file, or a directory written by `preprocess`.
pub fn load_corpus(path: &Path, pipeline: &Pipeline) -> Result<Corpus, Failure> {
    if !path.is_dir() {
        return Ok(Corpus {
            records: clean_records(path, pipeline)?,
            vocab: None,
        });
    }
    let corpus_path = path.join(CORPUS_FILE);
    let file = std::fs::File::open(&corpus_path).map_err(Failure::io(&corpus_path))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Failure::io(&corpus_path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CleanRecord = serde_json::from_str(&line).map_err(|e| {
            Failure::Data(format!("{}: line {}: {e}", corpus_path.display(), n + 1))
        })?;
        if record.class() == usize::MAX {
            return Err(Failure::Data(format!(
                "{}: line {}: unknown label {:?}",
                corpus_path.display(),
                n + 1,
                record.label
            )));
        }
        records.push(record);
    }
    let vocab_path = path.join(VOCAB_FILE);
    let vocab = Vocabulary::load(&vocab_path)
        .map_err(|e| Failure::Data(format!("{}: {e}", vocab_path.display())))?;
    Ok(Corpus {
        records,
        vocab: Some(vocab),
    })
}

pub fn build_corpus_vocab(records: &[CleanRecord], max_size: usize) -> Result<Vocabulary, Failure> {
    let tokens = records.iter().flat_map(|r| r.sentences.iter().flatten());
    build_vocab(tokens, max_size).map_err(Failure::from)
}

pub fn summarize(records: &[CleanRecord], vocab: &Vocabulary) -> Summary {
    let mut per_class: BTreeMap<String, usize> =
        LABELS.iter().map(|l| (l.to_string(), 0)).collect();
    let (mut tokens, mut oov, mut empty) = (0, 0, 0);
    for r in records {
        *per_class.entry(r.label.clone()).or_default() += 1;
        if r.sentences.is_empty() {
            empty += 1;
        }
        for t in r.sentences.iter().flatten() {
            tokens += 1;
            if vocab.get(t).is_none() {
                oov += 1;
            }
        }
    }
    Summary {
        records: records.len(),
        per_class,
        vocab_size: vocab.len(),
        tokens,
        oov_tokens: oov,
        oov_rate: if tokens == 0 {
            0.0
        } else {
            oov as f64 / tokens as f64
        },
        empty_after_cleaning: empty,
    }
}

pub fn corpus_jsonl(records: &[CleanRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Grid examples for the model.
pub fn examples(records: &[CleanRecord], vocab: &Vocabulary, hp: &HyperParams) -> Vec<Example> {
    records
        .iter()
        .map(|r| Example {
            tokens: tokens_to_grid(r.sentences.clone(), vocab, hp.max_sentences, hp.max_tokens)
                .grid,
            label: r.class(),
        })
        .collect()
}

/// Warns on stderr about records that cleaned to nothing.
pub fn warn_empty(records: &[CleanRecord]) {
    let empty: Vec<String> = records
        .iter()
        .filter(|r| r.sentences.is_empty())
        .map(|r| r.id.to_string())
        .collect();
    if !empty.is_empty() {
        eprintln!(
            "warning: {} record(s) empty after cleaning, used as all-padding input (ids {})",
            empty.len(),
            empty.join(", ")
        );
    }
}
