//! `key=value` run configuration: training and model settings plus file paths.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use macbig::model::HyperParams;
use macbig::text::{Pipeline, DEFAULT_VOCAB_SIZE};
use macbig::train::TrainConfig;
use serde::de::DeserializeOwned;

use crate::failure::Failure;

/// File name of the effective configuration written into output directories.
pub const CONFIG_ECHO: &str = "config.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub train: TrainConfig,
    pub hp: HyperParams,
    pub vocab_size: usize,
    pub data: Option<PathBuf>,
    pub glove: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub lemma_exceptions: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            train: TrainConfig::default(),
            hp: HyperParams::default(),
            vocab_size: DEFAULT_VOCAB_SIZE,
            data: None,
            glove: None,
            stopwords: None,
            abbreviations: None,
            lemma_exceptions: None,
            checkpoint: None,
            out: None,
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value
        .parse()
        .map_err(|_| Failure::Usage(format!("{key}: cannot parse {value:?}")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, Failure> {
    value.split(',').map(|v| number(key, v.trim())).collect()
}

/// Enum values by their serialized names.
fn named<T: DeserializeOwned>(key: &str, value: &str) -> Result<T, Failure> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Failure::Usage(format!("{key}: unknown value {value:?}")))
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn enum_name<T: serde::Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn show(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl CliConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        let value = value.trim();
        let t = &mut self.train;
        let h = &mut self.hp;
        match key {
            "learning_rate" => t.learning_rate = number(key, value)?,
            "beta1" => t.beta1 = number(key, value)?,
            "beta2" => t.beta2 = number(key, value)?,
            "adam_eps" => t.adam_eps = number(key, value)?,
            "l2_lambda" => t.l2_lambda = number(key, value)?,
            "l2_scope" => t.l2_scope = named(key, value)?,
            "batch_size" => t.batch_size = number(key, value)?,
            "epochs" => t.epochs = number(key, value)?,
            "folds" => t.folds = number(key, value)?,
            "split" => {
                let parts: Vec<f64> = list(key, value)?;
                t.split = parts
                    .try_into()
                    .map_err(|_| Failure::Usage("split: expected three fractions".into()))?;
            }
            "seed" => t.seed = number(key, value)?,
            "max_sentences" => h.max_sentences = number(key, value)?,
            "max_tokens" => h.max_tokens = number(key, value)?,
            "embedding_dim" => h.embedding_dim = number(key, value)?,
            "filters" => h.filters = number(key, value)?,
            "kernel_sizes" => h.kernel_sizes = list(key, value)?,
            "pool_size" => h.pool_size = number(key, value)?,
            "hidden" => h.hidden = number(key, value)?,
            "attention_dim" => h.attention_dim = number(key, value)?,
            "dropout" => h.dropout = number(key, value)?,
            "dense_activation" => h.dense_activation = named(key, value)?,
            "freeze_embedding" => h.freeze_embedding = number(key, value)?,
            "vocab_size" => self.vocab_size = number(key, value)?,
            "data" => self.data = path(value),
            "glove" => self.glove = path(value),
            "stopwords" => self.stopwords = path(value),
            "abbreviations" => self.abbreviations = path(value),
            "lemma_exceptions" => self.lemma_exceptions = path(value),
            "checkpoint" => self.checkpoint = path(value),
            "out" => self.out = path(value),
            _ => return Err(Failure::Usage(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and lines starting with '#'
    /// are skipped.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<(), Failure> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("{source}:{}: expected key=value", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Failure::Usage(format!("{source}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, file: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
        self.apply_text(&text, &file.display().to_string())
    }

    /// Applies `key=value` overrides given on the command line.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<(), Failure> {
        for pair in pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set {pair:?}: expected key=value")))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.train
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        self.hp
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        if self.vocab_size < 3 {
            return Err(Failure::Usage("vocab_size must be at least 3".into()));
        }
        Ok(())
    }

    /// Every key with its effective value, in a fixed order. Parsing the
    /// result reproduces this configuration.
    pub fn render(&self) -> String {
        let t = &self.train;
        let h = &self.hp;
        let entries = [
            ("learning_rate", t.learning_rate.to_string()),
            ("beta1", t.beta1.to_string()),
            ("beta2", t.beta2.to_string()),
            ("adam_eps", t.adam_eps.to_string()),
            ("l2_lambda", t.l2_lambda.to_string()),
            ("l2_scope", enum_name(&t.l2_scope)),
            ("batch_size", t.batch_size.to_string()),
            ("epochs", t.epochs.to_string()),
            ("folds", t.folds.to_string()),
            ("split", join(&t.split)),
            ("seed", t.seed.to_string()),
            ("max_sentences", h.max_sentences.to_string()),
            ("max_tokens", h.max_tokens.to_string()),
            ("embedding_dim", h.embedding_dim.to_string()),
            ("filters", h.filters.to_string()),
            ("kernel_sizes", join(&h.kernel_sizes)),
            ("pool_size", h.pool_size.to_string()),
            ("hidden", h.hidden.to_string()),
            ("attention_dim", h.attention_dim.to_string()),
            ("dropout", h.dropout.to_string()),
            ("dense_activation", enum_name(&h.dense_activation)),
            ("freeze_embedding", h.freeze_embedding.to_string()),
            ("vocab_size", self.vocab_size.to_string()),
            ("data", show(&self.data)),
            ("glove", show(&self.glove)),
            ("stopwords", show(&self.stopwords)),
            ("abbreviations", show(&self.abbreviations)),
            ("lemma_exceptions", show(&self.lemma_exceptions)),
            ("checkpoint", show(&self.checkpoint)),
            ("out", show(&self.out)),
        ];
        let mut out = String::from("# effective configuration\n");
        for (k, v) in entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Writes [`render`](Self::render) into `dir`.
    pub fn echo(&self, dir: &Path) -> Result<(), Failure> {
        std::fs::write(dir.join(CONFIG_ECHO), self.render()).map_err(Failure::io(dir))
    }

    /// Text pipeline with any configured word lists.
    pub fn pipeline(&self) -> Result<Pipeline, Failure> {
        let mut p = Pipeline::default();
        if let Some(f) = &self.stopwords {
            p = p.with_stopwords_file(f).map_err(Failure::data)?;
        }
        if let Some(f) = &self.abbreviations {
            p = p.with_abbreviations_file(f).map_err(Failure::data)?;
        }
        if let Some(f) = &self.lemma_exceptions {
            p = p.with_lemma_exceptions_file(f).map_err(Failure::data)?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips() {
        let mut c = CliConfig::default();
        c.apply_text(
            "# comment\nepochs=3\nsplit=0.6, 0.2, 0.2\nkernel_sizes=2,3\nl2_scope=all\ndense_activation=linear\nglove=/tmp/g.txt\n",
            "test",
        )
        .unwrap();
        let mut again = CliConfig::default();
        again.apply_text(&c.render(), "echo").unwrap();
        assert_eq!(again, c);
        assert_eq!(c.train.split, [0.6, 0.2, 0.2]);
        assert_eq!(c.hp.kernel_sizes, [2, 3]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut c = CliConfig::default();
        for bad in [
            "colour=red",
            "epochs=many",
            "split=0.5,0.5",
            "l2_scope=some",
            "no equals sign",
        ] {
            let err = c.apply_text(bad, "cfg").unwrap_err();
            assert_eq!(err.exit_code(), 1, "{bad}");
            assert!(err.to_string().starts_with("cfg:1:"), "{err}");
        }
    }
}
