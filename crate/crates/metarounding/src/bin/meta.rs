//! Thin command-line front end over [`metarounding::cli`].
//!
//! Exit codes: 0 on success, 2 when a sweep finished but some cells
//! failed (their rows carry the error text), 1 on any other error.

use clap::{Parser, Subcommand};

use metarounding::cli::{
    cmd_gen, cmd_online, cmd_solve, cmd_sweep, GenArgs, OnlineArgs, SolveArgs, SweepArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "meta",
    version,
    about = "Metarounding experiments: generate instances, round fractional solutions, \
             play online rounds, and sweep running times"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random set-cover instance as JSON.
    Gen(GenArgs),
    /// Round one fractional solution; writes a trace CSV and a JSON summary.
    Solve(SolveArgs),
    /// Play an online experiment; writes a per-round ledger CSV.
    Online(OnlineArgs),
    /// Time the rounding engine across instance sizes; writes a timing CSV.
    Sweep(SweepArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Gen(args) => report(cmd_gen(&args)),
        Command::Solve(args) => report(cmd_solve(&args).map(|_| ())),
        Command::Online(args) => report(cmd_online(&args).map(|_| ())),
        Command::Sweep(args) => match cmd_sweep(&args) {
            Ok(outcome) if outcome.failures > 0 => {
                log::warn!(
                    "{} of {} sweep cells failed; see the status column",
                    outcome.failures,
                    outcome.rows.len()
                );
                2
            }
            Ok(_) => 0,
            Err(err) => {
                log::error!("{err}");
                1
            }
        },
    };
    std::process::exit(code);
}

fn report(outcome: Result<(), metarounding::cli::CliError>) -> i32 {
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            log::error!("{err}");
            1
        }
    }
}
