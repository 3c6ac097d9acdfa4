//! Pipeline commands behind the `cadpu` binary: dataset generation,
//! training, upsampling, evaluation and the noise and scale sweeps.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

pub mod args;
pub mod commands;
mod error;
pub mod report;

pub use args::{Cli, Command};
pub use error::{CliError, Result};

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::MakeDataset(a) => commands::make_dataset(cli, a),
        Command::Train(a) => commands::train(cli, a),
        Command::Upsample(a) => commands::upsample(cli, a),
        Command::Eval(a) => commands::eval(cli, a),
        Command::NoiseSweep(a) => commands::noise_sweep(cli, a),
        Command::ScaleSweep(a) => commands::scale_sweep(cli, a),
    }
}
