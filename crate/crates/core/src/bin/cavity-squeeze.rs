use clap::Parser;

use cavity_squeeze::cli::{self, Cli};

fn main() {
    let cli = Cli::parse();
    match cli::run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(err) => {
            eprintln!("{}", cli::error_json(&err));
            std::process::exit(cli::exit_code(&err));
        }
    }
}
