//! The `space` command-line tool and the local HTTP service behind the
//! browser parser.

pub mod batch;
pub mod commands;
pub mod error;
pub mod server;

use clap::Parser;

pub use commands::{Cli, Command, DEFAULT_PORT};
pub use error::AppError;

/// Run with `argv` and return the process exit status. Usage errors exit 2,
/// command failures print one JSON error line to stderr and exit 1.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            1
        }
    }
}
