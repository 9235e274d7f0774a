use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{OOV_INDEX, PAD_INDEX};

pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<unk>";
pub const DEFAULT_VOCAB_SIZE: usize = 18_352;

/// Word ↔ index mapping with padding at 0 and out-of-vocabulary at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its index-ordered word list, which must
    /// start with the two reserved entries.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        if words.len() < 2
            || words[PAD_INDEX as usize] != PAD_TOKEN
            || words[OOV_INDEX as usize] != OOV_TOKEN
        {
            return Err(Error::invalid(format!(
                "vocabulary must begin with {PAD_TOKEN} and {OOV_TOKEN}"
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary entry {w:?}")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// Never true: the reserved entries are always present.
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: u32) -> Option<&str> {
        self.words.get(index as usize).map(String::as_str)
    }

    /// Index of `word`, or the OOV index.
    pub fn lookup(&self, word: &str) -> u32 {
        self.index.get(word).copied().unwrap_or(OOV_INDEX)
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// One word per line in index order.
    pub fn to_text(&self) -> String {
        let mut out = self.words.join("\n");
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let words: Vec<String> = text.lines().map(str::to_string).collect();
        if let Some(n) = words
            .iter()
            .position(|w| w.is_empty() || w.contains(char::is_whitespace))
        {
            return Err(Error::parse(
                n + 1,
                "vocabulary entries must be single non-empty words",
            ));
        }
        Self::from_words(words)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Ranks words by descending frequency, ties in lexicographic order, and
/// keeps the top `max_size − 2` after the reserved entries.
pub fn build_vocab<I, S>(tokens: I, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if max_size < 3 {
        return Err(Error::invalid(format!(
            "vocabulary size {max_size} must be at least 3"
        )));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in tokens {
        let t = t.as_ref();
        if t == PAD_TOKEN || t == OOV_TOKEN {
            continue;
        }
        *counts.entry(t.to_string()).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::invalid(
            "cannot build a vocabulary from an empty corpus",
        ));
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut words = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
    words.extend(ranked.into_iter().take(max_size - 2).map(|(w, _)| w));
    Vocabulary::from_words(words)
}
