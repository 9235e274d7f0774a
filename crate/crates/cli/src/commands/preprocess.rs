use std::path::Path;

use macbig::text::Vocabulary;

use super::{create_dir, required, to_json, write};
use crate::config::CliConfig;
use crate::data::{
    build_corpus_vocab, clean_records, corpus_jsonl, summarize, CORPUS_FILE, SUMMARY_FILE,
    VOCAB_FILE,
};
use crate::failure::Failure;

/// Writes the cleaned corpus, its vocabulary, a summary and the effective
/// configuration. With `vocab` the given vocabulary is reused, so held-out
/// data can be mapped onto a training vocabulary.
pub fn run(cfg: &CliConfig, vocab: Option<&Path>) -> Result<(), Failure> {
    let input = required(&cfg.data, "input")?;
    let out = required(&cfg.out, "out")?;
    let records = clean_records(input, &cfg.pipeline()?)?;
    let vocab = match vocab {
        Some(path) => {
            Vocabulary::load(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        }
        None => build_corpus_vocab(&records, cfg.vocab_size)?,
    };
    let summary = summarize(&records, &vocab);

    create_dir(out)?;
    write(&out.join(CORPUS_FILE), corpus_jsonl(&records))?;
    write(&out.join(VOCAB_FILE), vocab.to_text())?;
    write(&out.join(SUMMARY_FILE), to_json(&summary))?;
    cfg.echo(out)?;

    println!(
        "{} records ({}), vocabulary {} words, OOV rate {:.4}, {} empty after cleaning",
        summary.records,
        summary
            .per_class
            .iter()
            .map(|(k, v)| format!("{k} {v}"))
            .collect::<Vec<_>>()
            .join(", "),
        summary.vocab_size,
        summary.oov_rate,
        summary.empty_after_cleaning
    );
    Ok(())
}
