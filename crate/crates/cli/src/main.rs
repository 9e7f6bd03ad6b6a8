use clap::Parser;
use logsum_cli::args::Cli;
use logsum_cli::commands;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = cli.command.resolve().and_then(|cfg| commands::run(&cfg));
    if let Err(e) = result {
        eprintln!("logsum: {e}");
        std::process::exit(e.exit_code());
    }
}
