use std::fmt::Write as _;
use std::path::Path;

use macbig::model::{self, Model};
use macbig::text::{load_embeddings, EmbeddingTable};
use macbig::train::{cross_validate, history_csv, CrossValidation, FoldResult};
use serde::Serialize;

use super::{create_dir, required, to_json, write, write_report};
use crate::config::CliConfig;
use crate::data::{build_corpus_vocab, examples, load_corpus, warn_empty, VOCAB_FILE};
use crate::failure::Failure;

pub const FAILURE_MARKER: &str = "FAILED";

#[derive(Serialize)]
struct FoldSummary {
    fold: usize,
    best_epoch: Option<usize>,
    best_val_acc: Option<f64>,
    split_sizes: [usize; 3],
    test_accuracy: f64,
    test_precision: f64,
    test_recall: f64,
    test_f1: f64,
}

impl FoldSummary {
    fn of(r: &FoldResult) -> Self {
        let m = &r.test.report;
        FoldSummary {
            fold: r.fold,
            best_epoch: r.best_epoch,
            best_val_acc: r.best_val_acc,
            split_sizes: r.split_sizes,
            test_accuracy: m.accuracy,
            test_precision: m.macro_precision,
            test_recall: m.macro_recall,
            test_f1: m.macro_f1,
        }
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    mean: &'a macbig::train::MeanMetrics,
    folds: Vec<FoldSummary>,
}

pub fn fold_dir(out: &Path, fold: usize) -> std::path::PathBuf {
    out.join(format!("fold_{fold:02}"))
}

fn write_fold(
    out: &Path,
    result: &FoldResult,
    best: &Model,
    vocab: &[String],
) -> Result<(), Failure> {
    let dir = fold_dir(out, result.fold);
    create_dir(&dir)?;
    model::save(best, vocab, dir.join("model.ckpt")).map_err(Failure::from)?;
    write(&dir.join("history.csv"), history_csv(&result.history))?;
    write(&dir.join("fold.json"), to_json(&FoldSummary::of(result)))?;
    write_report(&dir, &result.test)
}

fn render(cv: &CrossValidation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>10} {:>9} {:>9} {:>9} {:>9}",
        "fold", "best epoch", "accuracy", "precision", "recall", "f1"
    );
    for r in &cv.folds {
        let m = &r.test.report;
        let epoch = r
            .best_epoch
            .map(|e| e.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<6} {:>10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            r.fold, epoch, m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1
        );
    }
    let m = &cv.mean;
    let _ = writeln!(
        out,
        "{:<6} {:>10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
        "mean", "", m.accuracy, m.precision, m.recall, m.f1
    );
    out
}

pub fn run(cfg: &CliConfig) -> Result<(), Failure> {
    let data = required(&cfg.data, "data")?;
    let out = required(&cfg.out, "out")?;
    let corpus = load_corpus(data, &cfg.pipeline()?)?;
    let vocab = match corpus.vocab {
        Some(v) => v,
        None => build_corpus_vocab(&corpus.records, cfg.vocab_size)?,
    };
    warn_empty(&corpus.records);
    let examples = examples(&corpus.records, &vocab, &cfg.hp);

    let table: Option<EmbeddingTable> = match &cfg.glove {
        Some(path) => {
            let t = load_embeddings(path, &vocab, cfg.hp.embedding_dim, cfg.train.seed)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            eprintln!(
                "embeddings: {} loaded, {} randomly initialized",
                t.loaded(),
                t.initialized()
            );
            Some(t)
        }
        None => None,
    };

    create_dir(out)?;
    cfg.echo(out)?;
    write(&out.join(VOCAB_FILE), vocab.to_text())?;
    let _ = std::fs::remove_file(out.join(FAILURE_MARKER));

    let words = vocab.words().to_vec();
    let result = cross_validate(
        &examples,
        macbig::model::LABELS.len(),
        &cfg.train,
        |_, rng| {
            let mut m = Model::new(cfg.hp.clone(), vocab.len(), rng)?;
            if let Some(t) = &table {
                m.set_embedding(t.table.clone())?;
            }
            Ok(m)
        },
        |fold, r| {
            eprintln!(
                "fold {fold} epoch {:>4}  train loss {:.4} acc {:.4}  val loss {:.4} acc {:.4}",
                r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc
            )
        },
        |result, best| {
            write_fold(out, result, best, &words)
                .map_err(|f| macbig::Error::InvalidArgument(f.to_string()))
        },
    );
    let cv = match result {
        Ok(cv) => cv,
        Err(e) => {
            let failure = Failure::from(e);
            write(&out.join(FAILURE_MARKER), format!("{failure}\n"))?;
            return Err(failure);
        }
    };

    let summary = RunSummary {
        mean: &cv.mean,
        folds: cv.folds.iter().map(FoldSummary::of).collect(),
    };
    write(&out.join("summary.json"), to_json(&summary))?;
    let table = render(&cv);
    write(&out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}
