//! Command-line driver for the `metahmm` library.

pub mod args;
mod commands;
mod plot;

pub use args::{Cli, FLAG_REGISTRY};
pub use commands::manifest_path;

use metahmm::{Error, ErrorCategory, Result};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err.category() {
        ErrorCategory::Validation => EXIT_VALIDATION,
        ErrorCategory::Io => EXIT_IO,
        ErrorCategory::Numerical => EXIT_NUMERICAL,
    }
}

/// Runs a parsed command line on a thread pool of the requested size.
pub fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {} workers: {e}", cli.global.workers)))?;
    pool.install(|| commands::dispatch(&cli.global, &cli.command))
}
