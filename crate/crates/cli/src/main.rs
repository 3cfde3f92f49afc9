use clap::Parser;

fn main() {
    let cli = ccx_cli::Cli::parse();
    let mut stdout = std::io::stdout();
    if let Err(err) = ccx_cli::run(cli, &mut stdout) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
