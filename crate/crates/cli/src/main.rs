use clap::Parser;

fn main() {
    let cli = floquet_cli::Cli::parse();
    std::process::exit(floquet_cli::run(&cli));
}
