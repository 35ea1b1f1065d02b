use clap::error::ErrorKind;
use clap::Parser;

use freqleak_cli::{run, Cli, EXIT_USAGE};

fn main() {
    // Exit codes are a contract (0 ok, 1 usage, 2 channel failure), so
    // clap's default exit-code-2 usage handling is remapped.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            err.print().expect("stderr is writable");
            std::process::exit(code);
        }
    };
    std::process::exit(run(cli));
}
