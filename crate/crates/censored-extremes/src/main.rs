use std::process::ExitCode;

use clap::Parser;

use censored_extremes::cli::{run, Cli};
use censored_extremes::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Usage(_) | Error::Parse(_) => 2,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
