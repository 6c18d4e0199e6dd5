use clap::Parser;

fn main() {
    let cli = match sirrt_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the configuration-error status.
            std::process::exit(if e.use_stderr() { sirrt_cli::EXIT_IO } else { sirrt_cli::EXIT_OK });
        }
    };
    std::process::exit(sirrt_cli::run(cli));
}
