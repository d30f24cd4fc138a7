//! `csm`: batch front end for the continuous sinusoidal vocoder toolkit.

mod commands;
mod fsutil;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use csm::config::RunConfig;
use csm::Error;

use commands::Context;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "csm",
    version,
    about = "Continuous sinusoidal model vocoder toolkit"
)]
struct Cli {
    /// TOML run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for noise synthesis and training [default: 42].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Metric report path (copy-synth, eval); standard output when absent.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Worker threads for batch verbs; 0 uses every core.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a WAV into a parameter container (f0, mvf, voicing, envelope).
    Analyze { input: PathBuf, output: PathBuf },
    /// Estimate and refine continuous F0 only.
    RefineF0 {
        input: PathBuf,
        output: PathBuf,
        /// Write `time f0` text lines instead of a container.
        #[arg(long)]
        text: bool,
    },
    /// Synthesize a WAV from a parameter container.
    Synth { input: PathBuf, output: PathBuf },
    /// Analyze, resynthesize and score a WAV file or a directory of them.
    CopySynth { input: PathBuf, output: PathBuf },
    /// Train the acoustic model on paired feature and target containers.
    Train {
        features: PathBuf,
        targets: PathBuf,
        model: PathBuf,
        /// Per-epoch loss log [default: <model>.loss.tsv].
        #[arg(long)]
        loss_log: Option<PathBuf>,
        /// Number of utterances (last by name) kept out of training.
        #[arg(long, default_value_t = 0)]
        heldout: usize,
    },
    /// Predict parameter containers from feature containers.
    Predict {
        model: PathBuf,
        features: PathBuf,
        output: PathBuf,
    },
    /// Score synthesized WAVs against natural ones with matching names.
    Eval { natural: PathBuf, synth: PathBuf },
    /// Generate the synthetic toy corpus (features, targets, wav).
    ToyCorpus {
        output: PathBuf,
        #[arg(long, default_value_t = 20)]
        utterances: usize,
    },
    /// Print (or write) the effective configuration as TOML.
    Config { output: Option<PathBuf> },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Io(_) | Error::Wav(_) | Error::Format(_) | Error::Shape(_) => 2,
        Error::Numerical(_) | Error::Domain(_) | Error::Degenerate(_) => 3,
    }
}

fn run(cli: Cli) -> csm::Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let jobs = if cli.jobs == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        cli.jobs
    };
    let ctx = Context {
        config,
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        seed_given: cli.seed.is_some(),
        jobs,
    };
    let report = cli.report.as_deref();
    match &cli.command {
        Command::Analyze { input, output } => commands::analyze_cmd(&ctx, input, output),
        Command::RefineF0 {
            input,
            output,
            text,
        } => commands::refine_f0_cmd(&ctx, input, output, *text),
        Command::Synth { input, output } => commands::synth_cmd(&ctx, input, output),
        Command::CopySynth { input, output } => {
            commands::copy_synth_cmd(&ctx, input, output, report)
        }
        Command::Train {
            features,
            targets,
            model,
            loss_log,
            heldout,
        } => commands::train_cmd(
            &ctx,
            features,
            targets,
            model,
            loss_log.as_deref(),
            *heldout,
        ),
        Command::Predict {
            model,
            features,
            output,
        } => commands::predict_cmd(&ctx, model, features, output),
        Command::Eval { natural, synth } => commands::eval_cmd(&ctx, natural, synth, report),
        Command::ToyCorpus { output, utterances } => {
            commands::toy_corpus_cmd(&ctx, output, *utterances)
        }
        Command::Config { output } => commands::config_cmd(&ctx, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csm: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
