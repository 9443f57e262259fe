use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use sdde_meansq::config::parse_config;
use sdde_meansq::pipeline::{
    error_exit_code, exit_code, run_pipeline, Command, Overrides, EXIT_CONFIG,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Classify,
    Resolvent,
    Meansquare,
    Simulate,
    Compare,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Classify => Command::Classify,
            Cmd::Resolvent => Command::Resolvent,
            Cmd::Meansquare => Command::MeanSquare,
            Cmd::Simulate => Command::Simulate,
            Cmd::Compare => Command::Compare,
        }
    }
}

/// Mean-square stability of scalar linear stochastic delay equations.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON problem description
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = run(&cli);
    ExitCode::from(code as u8)
}

fn run(cli: &Cli) -> i32 {
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return EXIT_CONFIG;
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        step: cli.step,
        horizon: cli.horizon,
    };
    let spec = match parse_config(&text).and_then(|s| overrides.apply(s)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return error_exit_code(&e);
        }
    };
    let result = run_pipeline(&spec, cli.command.into(), &cli.out);
    match &result {
        Ok(outcome) => {
            if let Some(c) = outcome.classification {
                println!("{}", c.as_str());
            }
            for p in &outcome.artifacts {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    exit_code(&result)
}
