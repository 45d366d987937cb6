use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paraselect::cli::{Command, Overrides, Run, RunConfig};
use paraselect::meta::Mode;

#[derive(Parser)]
#[command(name = "paraselect", version, about = "Weakly-supervised paraphrase pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// full, no_selection, no_pretrain_generator or plain_generator.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    adapter_url: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Write a synthetic corpus with planted paraphrase clusters.
    Synth,
    /// Build the vocabulary and the BM25 index.
    Index,
    /// Retrieve K weak pairs per training source.
    Expand,
    /// Ranking warm start for the selector and generator warm-up.
    Pretrain,
    /// Joint selection and generation training.
    Train,
    /// Test-set metrics, dev perplexity and the ranking study.
    Eval,
    /// Ranking study only.
    RankEval,
    /// Independent full runs over several K (and learning rates).
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Synth => Command::Synth,
            Cmd::Index => Command::Index,
            Cmd::Expand => Command::Expand,
            Cmd::Pretrain => Command::Pretrain,
            Cmd::Train => Command::Train,
            Cmd::Eval => Command::Eval,
            Cmd::RankEval => Command::RankEval,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

fn run(cli: &Cli) -> paraselect::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        k: cli.k,
        epochs: cli.epochs,
        mode: cli.mode,
        adapter_url: cli.adapter_url.clone(),
    });
    Run::new(cfg)?.execute(cli.command.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
