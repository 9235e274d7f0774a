//! Command-line workflows around the `macbig` classifier: preprocessing,
//! training, evaluation, prediction, attention export, gradient checks and
//! the parameter audit.
//!
//! Exit status is 0 on success, 1 for usage errors, 2 for data errors and 3
//! for numerical failures.

mod commands;
pub mod config;
pub mod data;
pub mod failure;
mod html;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::attention::{AttentionExport, SentenceAttention};
pub use config::{CliConfig, CONFIG_ECHO};
pub use failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "macbig",
    version,
    about = "Hierarchical CNN/BiGRU attention sentiment classifier"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// key=value configuration file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a JSON Lines dataset and build its vocabulary
    Preprocess {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        vocab_size: Option<usize>,
        /// Reuse an existing vocabulary file instead of building one
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train with repeated stratified re-splits
    Train {
        /// Raw JSON Lines file or a preprocessing directory
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        glove: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a checkpoint on a labelled dataset
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify one text
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        text: String,
        /// Print JSON instead of lines
        #[arg(long)]
        json: bool,
    },
    /// Export word and sentence attention for one text
    Attention {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        text: String,
        #[arg(long)]
        out_json: PathBuf,
        #[arg(long)]
        out_html: Option<PathBuf>,
    },
    /// Compare analytic gradients with central finite differences
    Gradcheck {
        /// Fewer layers and a single seed
        #[arg(long)]
        quick: bool,
        /// Scale one layer's analytic gradient to exercise the harness
        #[arg(long, hide = true)]
        fault: Option<String>,
    },
    /// Print layer shapes and parameter counts next to the reference table
    Params {
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

impl Cli {
    /// Defaults, then the configuration file, then `--set`, then the
    /// command's own flags.
    fn settings(&self) -> Result<CliConfig, Failure> {
        let mut cfg = CliConfig::default();
        if let Some(file) = &self.global.config {
            cfg.apply_file(file)?;
        }
        cfg.apply_overrides(&self.global.overrides)?;
        match &self.command {
            Command::Preprocess {
                input,
                vocab_size,
                out,
                ..
            } => {
                set(&mut cfg.data, input);
                set(&mut cfg.out, out);
                if let Some(v) = vocab_size {
                    cfg.vocab_size = *v;
                }
            }
            Command::Train {
                data,
                glove,
                seed,
                folds,
                epochs,
                out,
            } => {
                set(&mut cfg.data, data);
                set(&mut cfg.glove, glove);
                set(&mut cfg.out, out);
                if let Some(s) = seed {
                    cfg.train.seed = *s;
                }
                if let Some(f) = folds {
                    cfg.train.folds = *f;
                }
                if let Some(e) = epochs {
                    cfg.train.epochs = *e;
                }
            }
            Command::Evaluate { model, data, out } => {
                set(&mut cfg.checkpoint, model);
                set(&mut cfg.data, data);
                set(&mut cfg.out, out);
            }
            Command::Predict { model, .. } | Command::Attention { model, .. } => {
                set(&mut cfg.checkpoint, model);
            }
            Command::Params { vocab_size, .. } => {
                if let Some(v) = vocab_size {
                    cfg.vocab_size = *v;
                }
            }
            Command::Gradcheck { .. } => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = cli.settings()?;
    match &cli.command {
        Command::Preprocess { vocab, .. } => commands::preprocess::run(&cfg, vocab.as_deref()),
        Command::Train { .. } => commands::train::run(&cfg),
        Command::Evaluate { .. } => commands::evaluate::run(&cfg),
        Command::Predict { text, json, .. } => commands::predict::run(&cfg, text, *json),
        Command::Attention {
            text,
            out_json,
            out_html,
            ..
        } => commands::attention::run(&cfg, text, out_json, out_html.as_deref()),
        Command::Gradcheck { quick, fault } => commands::gradcheck::run(*quick, fault.clone()),
        Command::Params { json, .. } => commands::params::run(&cfg, *json),
    }
}
