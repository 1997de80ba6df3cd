use clap::Parser;

use speclearn::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
