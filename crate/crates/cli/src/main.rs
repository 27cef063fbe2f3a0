use clap::Parser;

/// Exit codes: 0 on success, 1 on a failed subtask, 2 on usage errors
/// (the parser exits with 2 itself).
fn main() {
    let cli = chaoscast_cli::args::Cli::parse();
    if let Err(err) = chaoscast_cli::commands::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
