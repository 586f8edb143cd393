use clap::Parser;

fn main() {
    let args = drci_cli::cli::Args::parse();
    std::process::exit(drci_cli::main_with(args));
}
