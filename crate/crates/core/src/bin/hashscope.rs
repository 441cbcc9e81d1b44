use clap::Parser;

use hashscope::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("hashscope: {e}");
        std::process::exit(e.exit_code());
    }
}
