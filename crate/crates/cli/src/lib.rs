//! Command-line front end for `pml-lfc`: training, prediction, evaluation,
//! synthetic data and the benchmark protocol with CSV reports.

pub mod args;
pub mod commands;
pub mod error;
pub mod protocol;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

/// Parses `argv` and runs the command, writing errors to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Train(a) => commands::train(a).map(|_| ()),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a, out),
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => in_pool(cli.threads, || commands::bench(a).map(|_| ())),
        Command::Sweep(a) => in_pool(cli.threads, || commands::sweep(a).map(|_| ())),
        Command::Ablate(a) => in_pool(cli.threads, || commands::ablate(a).map(|_| ())),
    }
}

fn in_pool<F>(threads: usize, f: F) -> CliResult<()>
where
    F: FnOnce() -> CliResult<()> + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(f)
}
