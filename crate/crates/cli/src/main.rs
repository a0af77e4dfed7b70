use std::process::ExitCode;

use ballpit_cli::{execute, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ballpit: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
