use std::process::ExitCode;

use clap::Parser;
use mlgcn::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("mlgcn: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
