use clap::Parser;

fn main() {
    let cli = irdd_cli::Cli::parse();
    if let Err(e) = irdd_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
