use clap::Parser;
use zeno_witness::cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = execute(&cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
