use clap::Parser;
use randex_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = randex_cli::run(&cli) {
        eprintln!("randex: {e}");
        std::process::exit(e.exit_code());
    }
}
