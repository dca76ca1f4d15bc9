use std::process::ExitCode;

use bohrcolor_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{}", out.summary);
            println!("report: {}", out.report_path.display());
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("bohrcolor: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
