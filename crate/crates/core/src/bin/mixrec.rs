use clap::Parser;

fn main() {
    std::process::exit(mixrec::cli::run(mixrec::cli::Cli::parse()));
}
