//! Library half of the `qpke` command: argument types, the range syntax
//! and the subcommand runners.

pub mod args;
pub mod commands;
pub mod error;
pub mod range;

pub use commands::run;
pub use error::{CliError, Result};
