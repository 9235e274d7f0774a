use macbig::metrics::evaluate;
use macbig::model::LABELS;
use macbig::train::evaluate_examples;
use serde::Serialize;

use super::{create_dir, load_model, required, write, write_report};
use crate::config::CliConfig;
use crate::data::{examples, load_corpus, warn_empty};
use crate::failure::Failure;

#[derive(Serialize)]
struct Prediction<'a> {
    id: usize,
    #[serde(rename = "true")]
    truth: &'a str,
    predicted: &'a str,
    probabilities: Vec<f64>,
}

pub fn run(cfg: &CliConfig) -> Result<(), Failure> {
    let (model, vocab) = load_model(cfg)?;
    let data = required(&cfg.data, "data")?;
    let corpus = load_corpus(data, &cfg.pipeline()?)?;
    if let Some(v) = &corpus.vocab {
        if v != &vocab {
            return Err(Failure::Data(format!(
                "checkpoint/vocab mismatch: {} was preprocessed with a {}-word vocabulary, the checkpoint has {} words",
                data.display(),
                v.len(),
                vocab.len()
            )));
        }
    }
    warn_empty(&corpus.records);
    let examples = examples(&corpus.records, &vocab, &model.hp);
    let set = evaluate_examples(&model, &examples, 64)?;
    let targets: Vec<usize> = examples.iter().map(|e| e.label).collect();
    let report = evaluate(&set.probs, &targets)?;

    print!("{}", report.render());
    println!("loss {:.6}", set.loss);

    if let Some(out) = &cfg.out {
        create_dir(out)?;
        cfg.echo(out)?;
        write_report(out, &report)?;
        let mut lines = String::new();
        for ((record, probs), &target) in corpus.records.iter().zip(&set.probs).zip(&targets) {
            let row = Prediction {
                id: record.id,
                truth: LABELS[target],
                predicted: LABELS[macbig::tensor::argmax(probs)],
                probabilities: probs.iter().map(|&p| p as f64).collect(),
            };
            lines.push_str(&serde_json::to_string(&row).expect("predictions serialize"));
            lines.push('\n');
        }
        write(&out.join("predictions.jsonl"), lines)?;
    }
    Ok(())
}
