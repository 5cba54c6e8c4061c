use clap::Parser;

use ocb::cli::{dispatch, exit_code, Cli};

fn main() {
    let cli = Cli::parse();
    let result = dispatch(&cli);
    if let Err(e) = &result {
        eprintln!("ocb: {e}");
    }
    std::process::exit(exit_code(&result));
}
