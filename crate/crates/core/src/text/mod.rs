//! Tweet cleaning, sentence splitting, vocabulary, document tensorization
//! and pretrained embedding ingestion.

mod clean;
mod dataset;
mod glove;
mod split;
mod vocab;

pub use clean::{clean_stage1, clean_stage2, parse_list, Lemmatizer};
pub use dataset::{load_jsonl, parse_label, read_jsonl, RawRecord};
pub use glove::{load_embeddings, read_embeddings, EmbeddingTable, RowSource};
pub use split::split_sentences;
pub use vocab::{build_vocab, Vocabulary, DEFAULT_VOCAB_SIZE, OOV_TOKEN, PAD_TOKEN};

use std::collections::HashSet;
use std::path::Path;

use crate::error::Result;
use crate::model::PAD_INDEX;

pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");
pub const DEFAULT_LEMMA_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.txt");

/// The word lists that parameterize cleaning and splitting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pipeline {
    pub stopwords: HashSet<String>,
    pub abbreviations: HashSet<String>,
    pub lemmatizer: Lemmatizer,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            stopwords: parse_list(DEFAULT_STOPWORDS).into_iter().collect(),
            abbreviations: parse_list(DEFAULT_ABBREVIATIONS).into_iter().collect(),
            lemmatizer: Lemmatizer::new(
                Lemmatizer::parse_exceptions(DEFAULT_LEMMA_EXCEPTIONS)
                    .expect("bundled exception table parses"),
            ),
        }
    }
}

/// A `[S × T]` grid of token indices plus the tokens kept in each row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedDoc {
    /// Row-major, `max_sentences · max_tokens` entries.
    pub grid: Vec<u32>,
    /// Tokens that made it into each non-padding row, after truncation.
    pub sentences: Vec<Vec<String>>,
    /// Set when nothing survived cleaning and the grid is all padding.
    pub empty: bool,
}

impl Pipeline {
    /// Replaces the stop-word list with the contents of a list file.
    pub fn with_stopwords_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        self.stopwords = parse_list(&std::fs::read_to_string(path)?)
            .into_iter()
            .collect();
        Ok(self)
    }

    pub fn with_abbreviations_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        self.abbreviations = parse_list(&std::fs::read_to_string(path)?)
            .into_iter()
            .collect();
        Ok(self)
    }

    /// Adds irregular forms on top of the bundled table; later entries win.
    pub fn with_lemma_exceptions_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        let table = Lemmatizer::parse_exceptions(&std::fs::read_to_string(path)?)?;
        self.lemmatizer.add_exceptions(table);
        Ok(self)
    }

    pub fn split_sentences(&self, text: &str) -> Vec<String> {
        split_sentences(text, &self.abbreviations)
    }

    pub fn clean_stage2<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        clean_stage2(tokens, &self.stopwords, &self.lemmatizer)
    }

    /// Raw text to cleaned token lists, one per sentence. Splitting runs on
    /// the raw text because stage 1 removes the sentence punctuation; each
    /// sentence is then cleaned on its own. Sentences that clean to nothing
    /// are dropped.
    pub fn sentences(&self, text: &str) -> Vec<Vec<String>> {
        self.split_sentences(text)
            .iter()
            .map(|s| {
                let stage1 = clean_stage1(s);
                let tokens: Vec<&str> = stage1.split_whitespace().collect();
                self.clean_stage2(&tokens)
            })
            .filter(|t| !t.is_empty())
            .collect()
    }

    /// Cleans, splits and maps `text` onto a `[max_sentences × max_tokens]`
    /// grid; see [`tokens_to_grid`].
    pub fn vectorize(
        &self,
        text: &str,
        vocab: &Vocabulary,
        max_sentences: usize,
        max_tokens: usize,
    ) -> TokenizedDoc {
        tokens_to_grid(self.sentences(text), vocab, max_sentences, max_tokens)
    }
}

/// Maps cleaned sentences onto a `[max_sentences × max_tokens]` grid. Unknown
/// words map to the OOV index; rows and sentences beyond the limits are
/// truncated, the rest padded with index 0. Empty sentences are skipped.
pub fn tokens_to_grid(
    sentences: Vec<Vec<String>>,
    vocab: &Vocabulary,
    max_sentences: usize,
    max_tokens: usize,
) -> TokenizedDoc {
    let mut grid = vec![PAD_INDEX; max_sentences * max_tokens];
    let mut kept = Vec::new();
    for tokens in sentences
        .into_iter()
        .filter(|s| !s.is_empty())
        .take(max_sentences)
    {
        let row = kept.len();
        let tokens: Vec<String> = tokens.into_iter().take(max_tokens).collect();
        for (col, t) in tokens.iter().enumerate() {
            grid[row * max_tokens + col] = vocab.lookup(t);
        }
        kept.push(tokens);
    }
    TokenizedDoc {
        grid,
        empty: kept.is_empty(),
        sentences: kept,
    }
}
