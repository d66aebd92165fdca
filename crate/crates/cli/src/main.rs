use std::process::ExitCode;

use clap::Parser;
use dwset_cli::{run, Cli};

const THREADS_VAR: &str = "DWSET_THREADS";

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("dwset: {e}");
                }
            }
            _ => {
                eprintln!("dwset: {THREADS_VAR} must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    let result = run(&cli).and_then(|outcome| outcome.write().map(|_| outcome.exit_code));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dwset: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
