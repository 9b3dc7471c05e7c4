use std::process::ExitCode;

use clap::Parser;
use qpke_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(value) = std::env::var("QPKE_DIM_CAP") {
        match value.trim().parse::<usize>() {
            Ok(cap) if cap > 0 => qpke_core::qmat::set_dim_cap(cap),
            _ => {
                eprintln!("error: QPKE_DIM_CAP must be a positive integer, got {value:?}");
                return ExitCode::from(2);
            }
        }
    }
    match qpke_cli::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
