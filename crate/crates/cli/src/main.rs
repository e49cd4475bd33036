use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use suptrap::{configure_threads, load_config, run, CliError, Command, Format, Overrides};

#[derive(Parser)]
#[command(name = "suptrap", version, about = "Superposition-trap simulations")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Probability enclosed by a null boundary under free evolution
    Bubble(RunArgs),
    /// Lattice path-sum identities on random instances
    Pathsum(RunArgs),
    /// Recirculating interferometer photon trap
    Optical(RunArgs),
    /// Atom interferometer trap with state-selective push
    Atom(RunArgs),
    /// Collapse-rate estimate from an atom or optical output file
    Estimate(RunArgs),
    /// Atom or optical runs over a list of parameter values
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured data format
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn execute(command: Command, args: RunArgs) -> Result<(), CliError> {
    configure_threads()?;
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
        format: args.format,
    };
    let config = load_config(&args.config, &overrides)?;
    let artifacts = run(command, &config)?;
    for a in &artifacts {
        println!("{}", config.output_dir.join(&a.path).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match cli.command {
        Sub::Bubble(a) => (Command::Bubble, a),
        Sub::Pathsum(a) => (Command::Pathsum, a),
        Sub::Optical(a) => (Command::Optical, a),
        Sub::Atom(a) => (Command::Atom, a),
        Sub::Estimate(a) => (Command::Estimate, a),
        Sub::Sweep(a) => (Command::Sweep, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
