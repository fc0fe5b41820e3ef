use std::process::ExitCode;

use clap::Parser;

use sensalign_cli::{run, Cli, EXIT_INVALID, EXIT_OK};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            println!("{}", e.to_json());
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
