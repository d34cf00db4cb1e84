use std::process::ExitCode;

use clap::Parser;
use rpm_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match execute(&cli) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &cli.io.out {
        Some(path) => std::fs::write(path, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(4);
    }
    ExitCode::SUCCESS
}
