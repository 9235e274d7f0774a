use macbig::model::{parameter_report, Model};
use macbig::Rng;

use super::to_json;
use crate::config::CliConfig;
use crate::failure::Failure;

pub fn run(cfg: &CliConfig, json: bool) -> Result<(), Failure> {
    let model = Model::new(
        cfg.hp.clone(),
        cfg.vocab_size,
        &mut Rng::new(cfg.train.seed),
    )?;
    let report = parameter_report(&model)?;
    if json {
        print!("{}", to_json(&report));
    } else {
        print!("{}", report.render());
    }
    Ok(())
}
