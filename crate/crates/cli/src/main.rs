use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hardylab::{run, CliError, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliCommand {
    Eval,
    Constants,
    Optimize,
    Scaling,
    Verify,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::Eval => Command::Eval,
            CliCommand::Constants => Command::Constants,
            CliCommand::Optimize => Command::Optimize,
            CliCommand::Scaling => Command::Scaling,
            CliCommand::Verify => Command::Verify,
        }
    }
}

/// Numerical laboratory for Hardy-Sobolev interpolation inequalities.
#[derive(Debug, Parser)]
#[command(name = "hardylab", version)]
struct Args {
    command: CliCommand,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the one in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and multi-start runs.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_path(&args.config)?;
    let command = Command::from(args.command);
    if cfg.command != command {
        return Err(CliError::Config(format!(
            "config is for command {} but {} was requested",
            cfg.command.name(),
            command.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn report_error(e: &CliError) -> ExitCode {
    eprintln!(
        "{}",
        serde_json::to_string(&e.record()).expect("error record serializes")
    );
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return report_error(&CliError::Config(format!("cannot start {n} threads: {e}")));
        }
    }
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => return report_error(&e),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("hardylab-out"));
    match run(&cfg, &out) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("wrote {} files to {}", outcome.files.len(), out.display());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => report_error(&e),
    }
}
