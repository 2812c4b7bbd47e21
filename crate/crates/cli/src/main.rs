use clap::Parser;
use crowdlab::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = run(&cli, &mut out) {
        eprintln!("crowdlab: {e}");
        std::process::exit(e.exit_code());
    }
}
