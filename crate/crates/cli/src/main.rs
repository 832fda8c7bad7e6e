use clap::Parser;

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let cli = snuggle_cli::Cli::parse();
    snuggle_cli::run(cli, &mut std::io::stdout().lock())
}
