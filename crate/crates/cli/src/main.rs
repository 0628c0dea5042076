use std::process::ExitCode;

use anc_cli::{execute, init_threads, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| execute(&cli));
    match result {
        Ok((cfg, outcome)) => {
            if cfg.output.is_none() {
                let stdout = std::io::stdout();
                if let Err(e) = outcome.table.write_csv(stdout.lock()) {
                    eprintln!("error: {}", e);
                    return ExitCode::from(1);
                }
                for line in &outcome.summary {
                    eprintln!("{}", line);
                }
            } else {
                for line in &outcome.summary {
                    println!("{}", line);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
