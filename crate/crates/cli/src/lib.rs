//! Command-line front end: argument parsing, run records and tables.

pub mod commands;
pub mod output;
pub mod record;

pub use commands::{run, Cli, Command, IoArgs, Output};

use std::time::Instant;

/// Formats a finished run for the requested output mode.
pub fn render(out: &Output, io: &IoArgs) -> String {
    if io.csv {
        out.table.to_csv()
    } else if io.table {
        out.table.to_text()
    } else {
        let mut s = out.record.to_json();
        s.push('\n');
        s
    }
}

/// Runs one command, timing it into the record.
pub fn execute(cli: &Cli) -> rpm::Result<String> {
    if cli.io.csv {
        if let Command::Cgf { .. } | Command::Rate { .. } = cli.command {
        } else {
            return Err(rpm::Error::InvalidArgument(
                "--csv is available for cgf and rate only".into(),
            ));
        }
    }
    let start = Instant::now();
    let job = || run(&cli.command);
    let mut out = match cli.io.threads {
        Some(0) => return Err(rpm::Error::InvalidArgument("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| rpm::Error::ResourceLimit(format!("thread pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    out.record.meta.wall_time = start.elapsed().as_secs_f64();
    Ok(render(&out, &cli.io))
}
