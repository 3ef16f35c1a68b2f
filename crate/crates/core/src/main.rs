use clap::Parser;

use hjent::expcli::{run_cli, Cli};

fn main() {
    let cli = Cli::parse();
    match run_cli(&cli) {
        Ok(manifest) => {
            for p in &manifest.artifacts {
                println!("{}", p.display());
            }
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
