use clap::Parser;

use pdcov::cli::{run, Args, CliConfig};

fn main() {
    let args = Args::parse();
    let level = CliConfig::resolve(&args).map(|c| c.verbosity).unwrap_or_else(|_| "warn".into());
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    std::process::exit(run(&args));
}
