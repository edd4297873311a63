use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tagflow::pipeline::{
    cmd_decode, cmd_eval, cmd_instruct, cmd_understand, cmd_vocab, BackendKind, Overrides, PipelineConfig,
    PipelineError,
};

#[derive(Parser)]
#[command(name = "tagflow", version, about = "Graph understanding and instruction pipeline driven by an LLM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "tagflow.toml")]
    config: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
    /// Output directory, replaces `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Remote,
    Mock,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Run the prompt-based GNN and write per-layer traces.
    Understand,
    /// Build the language-based ID vocabulary from the traces.
    Vocab,
    /// Write the instruction corpus and the evaluation instructions.
    Instruct,
    /// Decode the evaluation instructions under the prefix-tree constraint.
    Decode,
    /// Score predictions and write the report.
    Eval,
    /// All steps in order.
    Run,
}

fn execute(command: Command, config: &PipelineConfig) -> Result<(), PipelineError> {
    match command {
        Command::Understand => println!("{}", cmd_understand(config)?),
        Command::Vocab => println!("{}", cmd_vocab(config)?),
        Command::Instruct => println!("{}", cmd_instruct(config)?),
        Command::Decode => println!("{}", cmd_decode(config)?),
        Command::Eval => println!("{}", cmd_eval(config)?),
        Command::Run => {
            for step in [Command::Understand, Command::Vocab, Command::Instruct, Command::Decode, Command::Eval] {
                execute(step, config)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        backend: cli.backend.map(|b| match b {
            Backend::Remote => BackendKind::Remote,
            Backend::Mock => BackendKind::Mock,
        }),
        max_in_flight: cli.max_in_flight,
        out_dir: cli.out.clone(),
    };
    let result = PipelineConfig::load(&cli.config)
        .map(|c| c.with_overrides(&overrides))
        .and_then(|c| execute(cli.command, &c));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let PipelineError::Understand { manifest, .. } = &e {
                eprintln!("failure manifest: {}", manifest.display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
