//! Command-line front end for the `twoatom-core` library.
//!
//! Every subcommand resolves its parameters (flags over config file over
//! defaults) into an [`Invocation`], runs it and writes a [`RunManifest`]
//! beside the output so the run can be replayed.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod params;

pub use commands::{analytic_table, execute, RunOutcome, SimulationSummary};
pub use config::ConfigFile;
pub use error::CliError;
pub use manifest::RunManifest;
pub use params::{Cli, Command, Invocation};

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<RunOutcome, CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let invocation = match &cli.command {
        Command::Replay(args) => {
            RunManifest::load(&args.manifest)?.replay_invocation(args.out_dir.as_deref())
        }
        other => params::resolve(other, &config)?,
    };
    execute(&invocation)
}
