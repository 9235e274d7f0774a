//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use macbig::metrics::{class_report, confusion, evaluate, roc_curve};
use macbig::model::{
    self, parameter_report, CheckpointError, HyperParams, Model, BIGRU_NOTE, OOV_INDEX, PAD_INDEX,
};
use macbig::nn::gradcheck::{layer_suite, GradCheckConfig, SuiteOptions};
use macbig::nn::softmax;
use macbig::tensor::argmax;
use macbig::text::{build_vocab, clean_stage1, Pipeline};
use macbig::train::{evaluate_examples, tiny_model_check, train, TrainConfig};
use macbig::{Float, Rng};
use macbig_cli::data::{build_corpus_vocab, examples, load_corpus};
use macbig_cli::{CliConfig, CONFIG_ECHO};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, format!("took {took:.1?}, limit {limit:?}"))
}

fn dataset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_tweets.jsonl")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn cli(args: &[&str]) -> i32 {
    macbig_cli::run(std::iter::once("macbig").chain(args.iter().copied()))
}

fn parameter_conformance() -> Outcome {
    let start = Instant::now();
    let model =
        Model::new(HyperParams::default(), 18_352, &mut Rng::new(0)).map_err(|e| e.to_string())?;
    let report = parameter_report(&model).map_err(|e| e.to_string())?;
    let expected = [
        ("word", "Embedding", 1_835_200),
        ("word", "TimeDistributed (Dense)", 20_100),
        ("word", "Attention", 10_200),
        ("sentence", "TimeDistributed (Dense)", 20_100),
        ("sentence", "Dense", 303),
        ("sentence", "Attention", 10_200),
    ];
    for (level, layer, params) in expected {
        let row = report
            .row(level, layer)
            .ok_or(format!("no {level} {layer} row"))?;
        check(
            row.params == params,
            format!("{level} {layer}: {} != {params}", row.params),
        )?;
    }
    let convs: Vec<(&str, usize)> = report
        .rows
        .iter()
        .filter(|r| r.layer.starts_with("Conv1D"))
        .map(|r| (r.level.as_str(), r.params))
        .collect();
    let mut want = Vec::new();
    for level in ["word", "sentence"] {
        for p in [38_528, 51_328, 64_128] {
            want.push((level, p));
        }
    }
    check(convs == want, format!("conv rows {convs:?}"))?;
    let grus: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.layer.contains("GRU"))
        .collect();
    check(grus.len() == 2, "expected one recurrent row per level")?;
    for row in &grus {
        check(
            row.params == 137_400 && row.reference_params == Some(183_200) && row.footnote,
            format!("{row:?}"),
        )?;
    }
    // the word encoder as a whole carries the recurrent difference
    let encoder = report
        .row("sentence", "TimeDistributed (Model)")
        .ok_or("no word encoder row")?;
    check(
        encoder.params == 2_156_884 && encoder.footnote,
        format!("{encoder:?}"),
    )?;
    for row in report.rows.iter().filter(|r| !r.footnote) {
        check(row.matches() != Some(false), format!("mismatch in {row:?}"))?;
    }
    let text = report.render();
    check(
        text.contains(BIGRU_NOTE),
        "divergence note missing from the rendered report",
    )?;
    within(start, Duration::from_secs(1))?;
    Ok(format!(
        "total {}, {} rows",
        report.total,
        report.rows.len()
    ))
}

fn shape_conformance() -> Outcome {
    let start = Instant::now();
    let model =
        Model::new(HyperParams::default(), 18_352, &mut Rng::new(0)).map_err(|e| e.to_string())?;
    let t = model.shape_trace().map_err(|e| e.to_string())?;
    let v = |d: &[usize]| d.to_vec();
    let rows: Vec<(&str, Vec<usize>, Vec<usize>)> = vec![
        ("word input", v(&t.word_input), v(&[200])),
        ("embedding", v(&t.embedding), v(&[200, 100])),
        ("word conv k3", v(&t.word.conv[0]), v(&[198, 128])),
        ("word conv k4", v(&t.word.conv[1]), v(&[197, 128])),
        ("word conv k5", v(&t.word.conv[2]), v(&[196, 128])),
        ("word pool k3", v(&t.word.pool[0]), v(&[66, 128])),
        ("word pool k4", v(&t.word.pool[1]), v(&[65, 128])),
        ("word pool k5", v(&t.word.pool[2]), v(&[65, 128])),
        ("word concat", v(&t.word.concat), v(&[196, 128])),
        ("word merge pool", v(&t.word.merge_pool), v(&[65, 128])),
        ("word bigru", v(&t.word.bigru), v(&[65, 200])),
        ("word dense", v(&t.word.dense), v(&[65, 100])),
        ("word attention", v(&t.word.attention), v(&[100])),
        ("document input", v(&t.doc_input), v(&[15, 200])),
        ("sentence vectors", v(&t.sentence_vectors), v(&[15, 100])),
        ("sentence conv k3", v(&t.sentence.conv[0]), v(&[13, 128])),
        ("sentence conv k4", v(&t.sentence.conv[1]), v(&[12, 128])),
        ("sentence conv k5", v(&t.sentence.conv[2]), v(&[11, 128])),
        ("sentence pool k3", v(&t.sentence.pool[0]), v(&[4, 128])),
        ("sentence pool k4", v(&t.sentence.pool[1]), v(&[4, 128])),
        ("sentence pool k5", v(&t.sentence.pool[2]), v(&[3, 128])),
        ("sentence concat", v(&t.sentence.concat), v(&[11, 128])),
        (
            "sentence merge pool",
            v(&t.sentence.merge_pool),
            v(&[3, 128]),
        ),
        ("sentence bigru", v(&t.sentence.bigru), v(&[3, 200])),
        ("sentence dense", v(&t.sentence.dense), v(&[3, 100])),
        ("sentence attention", v(&t.sentence.attention), v(&[100])),
        ("dropout", v(&t.dropout), v(&[100])),
        ("output", v(&t.output), v(&[3])),
    ];
    for (name, got, want) in &rows {
        check(got == want, format!("{name}: {got:?} != {want:?}"))?;
    }
    let report = parameter_report(&model).map_err(|e| e.to_string())?;
    for row in &report.rows {
        check(
            row.shape_matches() != Some(false),
            format!("report shape mismatch {row:?}"),
        )?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} stages", rows.len()))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let cfg = GradCheckConfig::default();
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for seed in [1, 2, 3] {
        let mut all = layer_suite(seed, &cfg, &SuiteOptions::default());
        all.extend(tiny_model_check(seed, &cfg).map_err(|e| e.to_string())?);
        for c in all {
            let r = &c.report;
            check(
                r.passed && r.max_rel_error < 1e-3,
                format!("{} seed {seed}: {:.3e}", c.layer, r.max_rel_error),
            )?;
            worst = worst.max(r.max_rel_error);
            checks += r.checked;
        }
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "max relative error {worst:.2e} over {checks} coordinates"
    ))
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let settings = CliConfig::default();
    let corpus = load_corpus(&dataset(), &settings.pipeline().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let vocab =
        build_corpus_vocab(&corpus.records, settings.vocab_size).map_err(|e| e.to_string())?;
    let hp = HyperParams::default();
    let set = examples(&corpus.records, &vocab, &hp);
    check(set.len() == 32, format!("{} samples", set.len()))?;

    let cfg = TrainConfig {
        epochs: 300,
        ..TrainConfig::default()
    };
    check(
        cfg.batch_size >= set.len(),
        "default batch no longer covers the set",
    )?;
    let mut rng = Rng::new(cfg.seed);
    let model = Model::new(hp, vocab.len(), &mut rng).map_err(|e| e.to_string())?;
    let initial = evaluate_examples(&model, &set, cfg.batch_size).map_err(|e| e.to_string())?;
    let outcome = train(model, &set, &set, &cfg, &mut rng, |_| {}).map_err(|e| e.to_string())?;
    let last = outcome.history.last().ok_or("no epochs ran")?;
    let first_perfect = outcome
        .history
        .iter()
        .find(|r| r.train_acc == 1.0)
        .map(|r| r.epoch);
    check(
        first_perfect.is_some(),
        format!(
            "training accuracy peaked below 1.0, last {}",
            last.train_acc
        ),
    )?;
    check(
        last.train_loss < 0.1 * initial.loss,
        format!("loss {:.4} vs initial {:.4}", last.train_loss, initial.loss),
    )?;

    // the kept checkpoint, scored by the evaluate command on the same data
    let dir = scratch("overfit");
    let ckpt = dir.join("model.ckpt");
    model::save(&outcome.best, vocab.words(), &ckpt).map_err(|e| e.to_string())?;
    let out = dir.join("eval");
    let code = cli(&[
        "evaluate",
        "--model",
        ckpt.to_str().unwrap(),
        "--data",
        dataset().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    check(code == 0, format!("evaluate exited {code}"))?;
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let accuracy = report["report"]["accuracy"]
        .as_f64()
        .ok_or("report.json has no accuracy")?;
    check(accuracy == 1.0, format!("evaluate accuracy {accuracy}"))?;

    within(start, Duration::from_secs(600))?;
    Ok(format!(
        "accuracy 1.0 at epoch {}, loss {:.4} -> {:.5}, evaluate accuracy {accuracy}",
        first_perfect.unwrap(),
        initial.loss,
        last.train_loss
    ))
}

fn random_doc(hp: &HyperParams, vocab: usize, rng: &mut Rng) -> Vec<u32> {
    let mut doc = vec![PAD_INDEX; hp.doc_len()];
    let sentences = rng.below(hp.max_sentences as u64 + 1) as usize;
    for s in 0..sentences {
        let len = 1 + rng.below(hp.max_tokens as u64) as usize;
        for t in 0..len {
            doc[s * hp.max_tokens + t] = 1 + rng.below(vocab as u64 - 1) as u32;
        }
    }
    doc
}

fn is_distribution(w: &[Float]) -> bool {
    let sum: f64 = w.iter().map(|&v| v as f64).sum();
    w.iter().all(|&v| v >= 0.0) && (sum - 1.0).abs() <= 1e-5
}

fn attention_invariants() -> Outcome {
    let hp = HyperParams::default();
    let vocab = 500;
    let mut rng = Rng::new(5);
    let model = Model::new(hp.clone(), vocab, &mut rng).map_err(|e| e.to_string())?;
    let docs: Vec<Vec<u32>> = (0..100).map(|_| random_doc(&hp, vocab, &mut rng)).collect();
    let mut vectors = 0;
    let mut worst_shift: f64 = 0.0;
    for chunk in docs.chunks(10) {
        let refs: Vec<&[u32]> = chunk.iter().map(|d| d.as_slice()).collect();
        let pass = model
            .forward_batch(&refs, false, &mut Rng::new(0))
            .map_err(|e| e.to_string())?;
        for i in 0..chunk.len() {
            let trace = pass.trace(i);
            for w in &trace.word_weights {
                check(
                    w.len() == 65 && is_distribution(w),
                    "word weights are not a distribution",
                )?;
            }
            check(
                trace.sentence_weights.len() == 3 && is_distribution(&trace.sentence_weights),
                "sentence weights are not a distribution",
            )?;
            vectors += trace.word_weights.len() + 1;

            // logits up to a constant
            let logits: Vec<Float> = trace.probabilities.iter().map(|p| p.ln()).collect();
            let base = softmax(&logits);
            for shift in [-7.5, -1.0, 0.25, 3.0, 10.0] {
                let moved: Vec<Float> = logits.iter().map(|z| z + shift).collect();
                let p = softmax(&moved);
                for (a, b) in p.iter().zip(&base) {
                    worst_shift = worst_shift.max((*a as f64 - *b as f64).abs());
                }
                check(
                    argmax(&moved) == trace.predicted && argmax(&p) == trace.predicted,
                    "argmax moved under a shift",
                )?;
            }
        }
    }
    check(
        worst_shift <= 1e-6,
        format!("softmax shift difference {worst_shift:.2e}"),
    )?;
    Ok(format!(
        "{vectors} weight vectors, worst shift difference {worst_shift:.1e}"
    ))
}

fn pairwise_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

fn metrics_oracle() -> Outcome {
    let mut rng = Rng::new(6);
    let classes = 3;
    let mut auc_checks = 0;
    for set in 0..200 {
        let n = 3 + rng.below(150) as usize;
        let targets: Vec<usize> = (0..n).map(|_| rng.below(classes as u64) as usize).collect();
        let preds: Vec<usize> = (0..n).map(|_| rng.below(classes as u64) as usize).collect();
        let report =
            class_report(&confusion(&preds, &targets, classes).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let correct = preds.iter().zip(&targets).filter(|(p, t)| p == t).count();
        check(
            report.accuracy == correct as f64 / n as f64,
            format!("set {set}: accuracy"),
        )?;
        for c in 0..classes {
            let tp = (0..n).filter(|&i| preds[i] == c && targets[i] == c).count() as f64;
            let predicted = preds.iter().filter(|&&p| p == c).count() as f64;
            let actual = targets.iter().filter(|&&t| t == c).count() as f64;
            let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let recall = if actual > 0.0 { tp / actual } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            let m = &report.per_class[c];
            check(
                (m.precision - precision).abs() < 1e-12
                    && (m.recall - recall).abs() < 1e-12
                    && (m.f1 - f1).abs() < 1e-12,
                format!("set {set} class {c}: {m:?}"),
            )?;
        }

        let ties = set % 2 == 1;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if ties {
                    rng.below(6) as f64 / 5.0
                } else {
                    rng.next_u64() as f64 / u64::MAX as f64
                }
            })
            .collect();
        for c in 0..classes {
            let positive: Vec<bool> = targets.iter().map(|&t| t == c).collect();
            if positive.iter().all(|&p| p) || !positive.iter().any(|&p| p) {
                continue;
            }
            let curve = roc_curve(&scores, &targets, c).map_err(|e| e.to_string())?;
            let tol = if ties { 1e-6 } else { 1e-9 };
            let oracle = pairwise_auc(&scores, &positive);
            check(
                (curve.auc - oracle).abs() <= tol,
                format!("set {set} class {c}: auc {} vs {oracle}", curve.auc),
            )?;
            auc_checks += 1;
        }
    }
    let probs = vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.3, 0.1]];
    check(
        evaluate(&probs, &[1, 0]).is_ok(),
        "evaluate failed on a small set",
    )?;
    Ok(format!("200 sets, {auc_checks} curves"))
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let root = scratch("determinism");
    let data = dataset();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = root.join(name);
        let code = cli(&[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--seed",
            "11",
            "--folds",
            "2",
            "--epochs",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        check(code == 0, format!("train exited {code}"))?;
        runs.push(out);
    }
    let files = files_under(&runs[0]);
    check(
        files == files_under(&runs[1]),
        "runs wrote different file sets",
    )?;
    let mut compared = 0;
    for file in &files {
        let name = file.file_name().unwrap().to_string_lossy();
        if name == "history.csv" || name == "model.ckpt" {
            compared += 1;
        }
        let a = std::fs::read(runs[0].join(file)).unwrap();
        let b = std::fs::read(runs[1].join(file)).unwrap();
        if name == CONFIG_ECHO {
            // records the output directory, which is the one intended difference
            let settings = |bytes: &[u8]| -> Vec<String> {
                String::from_utf8_lossy(bytes)
                    .lines()
                    .filter(|l| !l.starts_with("out="))
                    .map(String::from)
                    .collect()
            };
            check(settings(&a) == settings(&b), "configuration echoes differ")?;
            continue;
        }
        check(a == b, format!("{} differs", file.display()))?;
    }
    check(
        compared == 4,
        format!("expected 2 histories and 2 checkpoints, found {compared}"),
    )?;
    Ok(format!("{} files byte-identical", files.len()))
}

const FUZZ_PIECES: &[&str] = &[
    "RT",
    "rt",
    "@who",
    "@a_b",
    "#covid19",
    "#Stay",
    "https://t.co/x",
    "http://a.b/c",
    "www.site",
    "nan",
    "NaN",
    "Masks",
    "save",
    "lives",
    "42",
    "!!",
    "?",
    ".",
    ",",
    "...",
    "'",
    "\"",
    "(",
    ")",
    "-",
    "😷",
    "é",
    "漢",
    "ü",
    "\t",
    "\n",
    " ",
    "  ",
    "dr.",
    "U.S.",
    "e.g.",
    "&amp;",
    "a#b",
    "x@y",
    "wwwx",
    "httpsx",
];

fn fuzz_text(rng: &mut Rng) -> String {
    let parts = rng.below(20) as usize;
    let mut s = String::new();
    for _ in 0..parts {
        s.push_str(FUZZ_PIECES[rng.below(FUZZ_PIECES.len() as u64) as usize]);
        match rng.below(3) {
            0 => s.push(' '),
            1 => {}
            _ => s.push(char::from_u32(0x20 + rng.below(0x60) as u32).unwrap()),
        }
    }
    s
}

fn pipeline_conformance() -> Outcome {
    let p = Pipeline::default();
    let eq = |got: &dyn std::fmt::Debug, want: &dyn std::fmt::Debug| {
        let (g, w) = (format!("{got:?}"), format!("{want:?}"));
        check(g == w, format!("{g} != {w}"))
    };
    eq(
        &clean_stage1("RT @user: Check https://t.co/x NOW!! 😷"),
        &"check now",
    )?;
    eq(&clean_stage1(""), &"")?;
    eq(&clean_stage1("Stay Safe"), &"stay safe")?;
    eq(
        &p.clean_stage2(&["the", "doctors", "are", "#heroes", "running"]),
        &["doctor", "run"],
    )?;
    eq(&p.clean_stage2(&["#covid19"]), &Vec::<String>::new())?;
    eq(&p.clean_stage2::<&str>(&[]), &Vec::<String>::new())?;
    eq(
        &p.split_sentences("i am fine. stay safe!"),
        &["i am fine.", "stay safe!"],
    )?;
    eq(&p.split_sentences("dr. smith tested positive.").len(), &1)?;
    eq(&p.split_sentences("no punctuation here").len(), &1)?;

    let (rows, cols) = (15, 200);
    let two = "Doctors are running. Masks help!";
    let vocab =
        build_vocab(p.sentences(two).into_iter().flatten(), 100).map_err(|e| e.to_string())?;
    let doc = p.vectorize(two, &vocab, rows, cols);
    check(doc.grid.len() == rows * cols, "grid size")?;
    check(
        doc.grid[0] != PAD_INDEX && doc.grid[cols] != PAD_INDEX,
        "rows 0 and 1 populated",
    )?;
    check(
        doc.grid[2 * cols..].iter().all(|&i| i == PAD_INDEX),
        "rows 2 to 14 all padding",
    )?;
    let oov = p.vectorize("vaccines", &vocab, rows, cols);
    check(
        oov.grid[0] == OOV_INDEX,
        "unknown word maps to the OOV index",
    )?;
    let long: String = (0..20).map(|i| format!("word{i} here. ")).collect();
    let long_vocab =
        build_vocab(p.sentences(&long).into_iter().flatten(), 100).map_err(|e| e.to_string())?;
    let doc = p.vectorize(&long, &long_vocab, rows, cols);
    let kept: Vec<u32> = (0..rows).map(|r| doc.grid[r * cols]).collect();
    let want: Vec<u32> = (0..15)
        .map(|i| long_vocab.get(&format!("word{i}")).unwrap())
        .collect();
    check(
        kept == want,
        "a 20-sentence record keeps exactly its first 15 sentences",
    )?;

    let mut rng = Rng::new(8);
    for case in 0..1000 {
        let text = fuzz_text(&mut rng);
        let once = clean_stage1(&text);
        check(
            clean_stage1(&once) == once,
            format!("case {case}: {text:?}"),
        )?;
    }
    Ok("examples exact, 1000 fuzzed strings idempotent".into())
}

/// Rewrites the first manifest entry's offset past the end of the file.
fn push_offset_past_end(bytes: &[u8]) -> Vec<u8> {
    let len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let mut manifest: serde_json::Value = serde_json::from_slice(&bytes[12..12 + len]).unwrap();
    manifest["entries"][0]["offset"] = serde_json::json!(bytes.len() * 4);
    let text = serde_json::to_vec(&manifest).unwrap();
    let mut out = bytes[..8].to_vec();
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(&text);
    out.extend_from_slice(&bytes[12 + len..]);
    out
}

fn checkpoint_round_trip() -> Outcome {
    let dir = scratch("checkpoint");
    let mut rng = Rng::new(9);
    let words: Vec<String> = ["<pad>", "<oov>", "mask", "safe", "nurse"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let model =
        Model::new(HyperParams::default(), words.len(), &mut rng).map_err(|e| e.to_string())?;
    let (first, second) = (dir.join("first.ckpt"), dir.join("second.ckpt"));
    model::save(&model, &words, &first).map_err(|e| e.to_string())?;
    let (loaded, vocab) = model::load(&first).map_err(|e| e.to_string())?;
    check(loaded == model && vocab == words, "loaded model differs")?;
    model::save(&loaded, &vocab, &second).map_err(|e| e.to_string())?;
    let bytes = std::fs::read(&first).unwrap();
    check(
        bytes == std::fs::read(&second).unwrap(),
        "second save differs",
    )?;

    let code = |bytes: &[u8]| match model::from_bytes(bytes) {
        Ok(_) => "loaded",
        Err(e) => e.code(),
    };
    let mut magic = bytes.clone();
    magic[0] = b'X';
    let truncated = &bytes[..bytes.len() - 10];
    let past_end = push_offset_past_end(&bytes);
    let mut wrong_size = bytes.clone();
    wrong_size.extend_from_slice(&[0, 0, 0, 0]);
    let codes = [
        code(&magic),
        code(truncated),
        code(&past_end),
        code(&wrong_size),
    ];
    check(
        codes == ["bad_magic", "truncated", "truncated", "inconsistent"],
        format!("codes {codes:?}"),
    )?;
    check(
        matches!(model::from_bytes(&magic), Err(CheckpointError::BadMagic)),
        "bad magic message",
    )?;
    Ok(format!("{} bytes round trip, codes {codes:?}", bytes.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("parameter conformance", parameter_conformance),
        ("shape conformance", shape_conformance),
        ("gradient correctness", gradient_correctness),
        ("overfit", overfit),
        ("attention invariants", attention_invariants),
        ("metrics oracle equivalence", metrics_oracle),
        ("determinism", determinism),
        ("pipeline conformance", pipeline_conformance),
        ("checkpoint round trip", checkpoint_round_trip),
    ];
    // optional name filters, e.g. `cargo test --test acceptance -- overfit`
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}; {secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
