use macbig::nn::gradcheck::{layer_suite, GradCheckConfig, LayerCheck, SuiteOptions};
use macbig::train::tiny_model_check;

use crate::failure::Failure;

const SEEDS: [u64; 3] = [1, 2, 3];

/// Per-layer suite on three seeds plus the end-to-end tiny-model check.
/// `--quick` runs the reduced layer suite on one seed without the model.
pub fn run(quick: bool, fault: Option<String>) -> Result<(), Failure> {
    let cfg = GradCheckConfig::default();
    let opts = SuiteOptions { quick, fault };
    let seeds = if quick { &SEEDS[..1] } else { &SEEDS[..] };
    println!(
        "eps {:e}, denominator floor {}, tolerance {:e}",
        cfg.eps, cfg.floor, cfg.tol
    );
    println!(
        "{:<5} {:<28} {:>12} {:>9} {:>8}  result",
        "seed", "layer", "max rel err", "checked", "skipped"
    );
    let mut failed = Vec::new();
    for &seed in seeds {
        let mut checks: Vec<LayerCheck> = layer_suite(seed, &cfg, &opts);
        if !quick {
            checks.extend(tiny_model_check(seed, &cfg)?);
        }
        for c in checks {
            let r = &c.report;
            println!(
                "{seed:<5} {:<28} {:>12.3e} {:>9} {:>8}  {}",
                c.layer,
                r.max_rel_error,
                r.checked,
                r.skipped,
                if r.passed { "ok" } else { "FAIL" }
            );
            if !r.passed {
                if let Some(d) = &r.diagnostic {
                    println!("      {d}");
                }
                failed.push(format!("{} (seed {seed})", c.layer));
            }
        }
    }
    if failed.is_empty() {
        println!("all gradient checks passed");
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "gradient check failed for {}",
            failed.join(", ")
        )))
    }
}
