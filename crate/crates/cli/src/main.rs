use clap::Parser;

fn main() {
    std::process::exit(kawahara_cli::run(kawahara_cli::Cli::parse()));
}
