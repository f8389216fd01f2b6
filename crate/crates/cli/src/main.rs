use std::process::ExitCode;

use clap::Parser;
use twoatom_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Some(text) = &outcome.stdout {
                print!("{text}");
            }
            for path in &outcome.outputs {
                eprintln!("wrote {}", path.display());
            }
            eprintln!("wrote {}", outcome.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
