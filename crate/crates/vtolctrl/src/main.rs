use clap::Parser;

use vtolctrl::cli::{self, Cli};

fn main() {
    // usage errors are part of the exit-code contract: 1, not clap's 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print and exit successfully
            if e.use_stderr() {
                let _ = e.print();
                std::process::exit(cli::EXIT_CONFIG);
            }
            let _ = e.print();
            std::process::exit(cli::EXIT_OK);
        }
    };
    std::process::exit(cli::run(cli));
}
