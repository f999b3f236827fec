use clap::Parser;

use fedmf_cli::args::{Cli, Command};
use fedmf_cli::{attack_cmd, bench_cmd, train_cmd};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => train_cmd::run(args),
        Command::Attack(args) => attack_cmd::run(args),
        Command::Bench(args) => bench_cmd::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
