use std::process::ExitCode;

use cdm_cli::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command.run() {
        Ok(table) => {
            print!("{table}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cdm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
