//! Command-line surface for the coherence simulator.
//!
//! Subcommands mirror the experiment: `trap-spectrum` emits the level table,
//! `simulate` produces Rabi/Ramsey/echo traces, `lindblad-echo` the heating
//! prediction for the coherence decay, `fit` runs the global fit, and
//! `sequence` executes a pulse-program file. Every output starts with a
//! reproducibility header (tool version, config hash, seed); identical
//! inputs produce byte-identical files up to the timestamp line.

mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use cohsim_core::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "cohsim", version, about = "Coherence simulator and fitting toolkit")]
struct Cli {
    /// Configuration file (TOML); defaults to $COHSIM_CONFIG or built-in
    /// values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Seed recorded in outputs and used by stochastic stages.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the vibrational level table (E_n, delta_ls) of the configured
    /// trap.
    TrapSpectrum(commands::TrapSpectrumArgs),
    /// Simulate a pulse-sequence signal over a time grid.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Predict the echo coherence decay under heating and report T2.
    LindbladEcho(commands::LindbladEchoArgs),
    /// Global fit of measured Rabi/Ramsey/echo traces.
    Fit(commands::FitArgs),
    /// Run a pulse-program file.
    Sequence(commands::SequenceArgs),
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Rabi oscillation p_e(t_p).
    Rabi(commands::RabiArgs),
    /// Ramsey fringe p_e(t_d).
    Ramsey(commands::RamseyArgs),
    /// Spin-echo fringe p_e(t_d) at fixed t_echo.
    Echo(commands::EchoArgs),
}

/// Shared output-destination flag.
#[derive(Args, Clone)]
struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", output::error_line("validation", &e.to_string()));
            return ExitCode::from(1);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (class, code) = match e.class() {
                ErrorClass::Validation => ("validation", 1),
                ErrorClass::Numerical => ("numerical", 2),
            };
            eprintln!("{}", output::error_line(class, &e.to_string()));
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let context = commands::Context::prepare(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::TrapSpectrum(args) => commands::trap_spectrum(&context, &args),
        Command::Simulate(SimulateCommand::Rabi(args)) => commands::simulate_rabi(&context, &args),
        Command::Simulate(SimulateCommand::Ramsey(args)) => {
            commands::simulate_ramsey(&context, &args)
        }
        Command::Simulate(SimulateCommand::Echo(args)) => commands::simulate_echo(&context, &args),
        Command::LindbladEcho(args) => commands::lindblad_echo(&context, &args),
        Command::Fit(args) => commands::fit(&context, &args),
        Command::Sequence(args) => commands::sequence(&context, &args),
    }
}
