use clap::Parser;
use qtti_core::ErrorCategory;

fn main() {
    // clap exits with code 2 on usage errors, matching the config category.
    let cli = qtti_cli::Cli::parse();
    if let Err(e) = qtti_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(match e.category() {
            ErrorCategory::Config => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Capacity => 4,
        });
    }
}
