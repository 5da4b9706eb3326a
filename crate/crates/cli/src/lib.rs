//! Command-line front end: dataset generation, splits, analysis, baseline
//! evaluation, fixture synthesis and input validation.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::execute;
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "annoqa", version, about = "Question / logical form / evidence datasets from annotated notes")]
pub struct Cli {
    /// TOML file with default paths and settings.
    #[arg(long, global = true, env = "ANNOQA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default, Clone)]
pub struct InputArgs {
    /// Corpus directory (docs/, ann/, patients.tsv, classes.tsv).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Question template file.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// LF template file.
    #[arg(long)]
    pub lf: Option<PathBuf>,
    /// Schema file; the built-in schema when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Lab reference range file.
    #[arg(long)]
    pub kb: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the dataset, its report and an audit sample.
    Generate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail when any evidence disagrees with the corpus.
        #[arg(long)]
        strict: bool,
    },
    /// Split a dataset into train and test files.
    Split {
        /// Dataset file (JSON lines).
        #[arg(long)]
        data: PathBuf,
        /// ql1, ql2 or qa [default: ql2].
        #[arg(long)]
        strategy: Option<String>,
        /// Train fraction [default: 0.8].
        #[arg(long)]
        ratio: Option<f64>,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics and paraphrase diversity.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// smoothed or unsmoothed [default: smoothed].
        #[arg(long)]
        bleu: Option<String>,
        /// Write analysis.txt and analysis.json here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// LF accuracy of a predictions file, or of a template-matching baseline.
    EvalQl {
        /// Gold records (JSON lines).
        #[arg(long)]
        gold: PathBuf,
        /// Predictions file with LF strings; rank 1 is scored.
        #[arg(long, conflicts_with = "train")]
        pred: Option<PathBuf>,
        /// Train records; their templates are the matcher's candidates.
        #[arg(long, requires = "templates")]
        train: Option<PathBuf>,
        /// hm1 or hm2 [default: hm1].
        #[arg(long)]
        matcher: Option<String>,
        /// Word vectors for hm2.
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// SIF sentence vectors for hm2 instead of the plain mean.
        #[arg(long)]
        sif: bool,
        /// Entity lexicon: `fills` (slot fills of the given records) or
        /// `corpus` (concept surfaces, needs --corpus) [default: fills].
        #[arg(long)]
        lexicon: Option<String>,
        /// Fraction of lexicon entries to drop at random.
        #[arg(long, default_value_t = 0.0)]
        drop_lexicon: f64,
        #[command(flatten)]
        input: InputArgs,
        /// Write the matcher's predictions here.
        #[arg(long)]
        write_pred: Option<PathBuf>,
    },
    /// Modified exact match and F1 of ranked evidence predictions.
    EvalQa {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// endpoints or window [default: endpoints].
        #[arg(long)]
        em_rule: Option<String>,
    },
    /// Train the TF-IDF logistic regression class predictor and report
    /// subset accuracy on the test records.
    EvalCls {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 1.0)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1e-4)]
        l2: f64,
        /// Write predicted label sets here.
        #[arg(long)]
        write_pred: Option<PathBuf>,
    },
    /// Write a synthetic corpus, its reference ranges and, given templates,
    /// word vectors for their vocabulary.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        patients: usize,
        #[arg(long, default_value_t = 3)]
        notes_per_patient: usize,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        dim: usize,
    },
    /// Check corpus, schema, templates and KB without generating.
    Validate {
        #[command(flatten)]
        input: InputArgs,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on failure, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let mut out = std::io::stdout().lock();
    match execute(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            1
        }
    }
}
