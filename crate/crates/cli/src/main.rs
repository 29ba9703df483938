//! `ctcstream` command-line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ctcstream", version, about = "Streaming CTC prefix beam search toolkit")]
struct Cli {
    /// Alphabet file; the built-in English alphabet when omitted.
    #[arg(long, global = true)]
    alphabet: Option<PathBuf>,

    /// Seed for every randomized step.
    #[arg(long, global = true, env = "CTCSTREAM_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct SearchArgs {
    /// n-gram model file; a uniform LM when omitted.
    #[arg(long)]
    lm: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    beam_width: usize,
    #[arg(long, default_value_t = 50)]
    beam_depth: usize,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.5)]
    beta: f64,
    #[arg(long, default_value_t = 20)]
    prune_interval: usize,
    #[arg(long, default_value_t = 50)]
    emit_interval: usize,
    #[arg(long, default_value_t = 1)]
    nbest: usize,
    /// Log-score margin below the frame's best under which new children are
    /// not created.
    #[arg(long, default_value_t = ctcstream::decoder::DEFAULT_ADMISSION_MARGIN, conflicts_with = "no_admission_margin")]
    admission_margin: f64,
    #[arg(long)]
    no_admission_margin: bool,
    /// Accept frames whose probabilities do not sum to one.
    #[arg(long)]
    lenient: bool,
    /// Decode in single precision.
    #[arg(long)]
    f32: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a CPF-1 posterior stream into JSON-lines emission records.
    Decode {
        /// CPF-1 file, or `-` for stdin.
        input: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode utterances over a grid of beam widths and depths; TSV output.
    Sweep {
        /// CPF-1 files, one per utterance.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Reference transcripts, paired with the inputs in order.
        #[arg(long = "reference", required = true)]
        references: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        depths: Vec<usize>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Write synthetic posteriors for a transcript.
    Synth {
        #[arg(long, conflicts_with = "text_file", required_unless_present = "text_file")]
        text: Option<String>,
        #[arg(long)]
        text_file: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        frames_per_char: usize,
        #[arg(long, default_value_t = 2)]
        blank_run: usize,
        /// Mass on the intended symbol; the rest is spread evenly.
        #[arg(long, default_value_t = 0.9)]
        peak: f64,
        /// Standard deviation of Gaussian log-domain jitter.
        #[arg(long, default_value_t = 0.0)]
        logit_noise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an n-gram model from a corpus with one sentence per line.
    LmTrain {
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        order: usize,
        #[arg(long, default_value_t = ctcstream::lm::DEFAULT_DISCOUNT)]
        discount: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bits per character on held-out text.
    LmEval {
        #[arg(long)]
        lm: PathBuf,
        heldout: PathBuf,
    },
    /// Sample text from a model.
    LmSample {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long, default_value_t = 200)]
        max_chars: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
    },
    /// Character and word error rates of a hypothesis; TSV output.
    Score {
        #[arg(long)]
        reference: PathBuf,
        /// Plain-text hypothesis.
        #[arg(long, conflicts_with = "emissions", required_unless_present = "emissions")]
        hypothesis: Option<PathBuf>,
        /// Emission log; its final best is scored and stability reported.
        #[arg(long)]
        emissions: Option<PathBuf>,
    },
    /// Exhaustive path enumeration for tiny streams; TSV score table.
    Oracle {
        input: PathBuf,
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Rows to print, best first.
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Concatenate CPF-1 files frame-wise into one stream.
    Concat {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
