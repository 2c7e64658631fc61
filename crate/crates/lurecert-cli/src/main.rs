use clap::Parser;

fn main() {
    let cli = lurecert_cli::Cli::parse();
    std::process::exit(lurecert_cli::run(cli));
}
