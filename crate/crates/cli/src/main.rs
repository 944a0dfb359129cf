mod args;
mod commands;
mod instance;
mod report;

use clap::Parser;

use args::{Cli, Command};
use commands::{cmd_axioms, cmd_gen, cmd_inspect, cmd_solve, cmd_verify, Outcome};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout and succeed; true usage errors
            // go to stderr and exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Axioms(a) => cmd_axioms(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match result {
        Ok(Outcome::Pass) => {}
        Ok(Outcome::FailedChecks) => std::process::exit(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
