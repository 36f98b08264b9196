use clap::Parser;

fn main() {
    let cli = spgm_cli::app::Cli::parse();
    if let Err(e) = spgm_cli::app::run(&cli) {
        eprintln!("spgm: {e}");
        std::process::exit(e.exit_code());
    }
}
