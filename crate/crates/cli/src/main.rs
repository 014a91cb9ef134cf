use std::process::ExitCode;

use clap::Parser;
use fiberlay_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for l in &out.lines {
                println!("{l}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("fiberlay: verification failed: {}", out.failed.join(", "));
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("fiberlay: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
