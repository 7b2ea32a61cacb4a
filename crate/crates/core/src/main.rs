use clap::Parser;

fn main() {
    let cli = csf_core::cli::Cli::parse();
    if let Err(e) = csf_core::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
