use clap::Parser;

fn main() {
    let cli = bluerank::cli::Cli::parse();
    if let Err(err) = bluerank::cli::run(cli) {
        eprintln!("bluerank: {err}");
        std::process::exit(1);
    }
}
