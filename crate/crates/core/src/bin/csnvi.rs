use clap::Parser;

fn main() {
    std::process::exit(csnvi::cli::run(csnvi::cli::Cli::parse()));
}
