use clap::Parser;

fn main() {
    let args = quadric_asym_cli::Args::parse();
    std::process::exit(quadric_asym_cli::run(&args));
}
