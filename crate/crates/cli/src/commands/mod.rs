pub mod attention;
pub mod evaluate;
pub mod gradcheck;
pub mod params;
pub mod predict;
pub mod preprocess;
pub mod train;

use std::path::Path;

use macbig::metrics::EvalReport;
use macbig::model::{self, Model, LABELS};
use macbig::text::Vocabulary;

use crate::config::CliConfig;
use crate::failure::Failure;

/// The value of a path setting that the command cannot run without.
fn required<'a>(value: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    value.as_deref().ok_or_else(|| {
        Failure::Usage(format!(
            "missing --{flag} (or `{flag}=` in the configuration)"
        ))
    })
}

fn load_model(cfg: &CliConfig) -> Result<(Model, Vocabulary), Failure> {
    let path = required(&cfg.checkpoint, "model")?;
    let (model, words) = model::load(path)
        .map_err(|e| Failure::Data(format!("{}: {e} ({})", path.display(), e.code())))?;
    let vocab = Vocabulary::from_words(words)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok((model, vocab))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(Failure::io(dir))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(Failure::io(path))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// `report.json`, `report.txt` and one `roc_<class>.csv` per class with a curve.
fn write_report(dir: &Path, report: &EvalReport) -> Result<(), Failure> {
    write(&dir.join("report.json"), to_json(report))?;
    write(&dir.join("report.txt"), report.render())?;
    for roc in report.roc.iter().flatten() {
        write(
            &dir.join(format!("roc_{}.csv", LABELS[roc.class])),
            roc.to_csv(),
        )?;
    }
    Ok(())
}
