use clap::Parser;
use stl_agim::cli::{run, Cli, EXIT_ERROR};

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let code = run(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    });
    std::process::exit(code);
}
