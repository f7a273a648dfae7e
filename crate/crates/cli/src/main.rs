use std::process::ExitCode;

use clap::Parser;
use dnls_cli::{effective_config, execute, Cli, OUTPUT_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = effective_config(&cli, std::env::var_os(OUTPUT_ENV).map(Into::into))
        .and_then(|cfg| execute(cli.command, &cfg));
    match run {
        Ok(manifest) => {
            for c in &manifest.checks {
                let mark = if c.passed { "pass" } else { "FAIL" };
                println!("{mark} {}: {:.6e} (tolerance {:.3e})", c.name, c.value, c.tolerance);
            }
            if manifest.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("dnls {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
