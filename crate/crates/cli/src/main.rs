use clap::Parser;

fn main() {
    let command_line: Vec<String> = std::env::args().collect();
    let cli = belief_cli::Cli::parse();
    match belief_cli::run(&cli, &command_line) {
        Ok(report) => println!("{report}"),
        Err(e) => {
            eprintln!("beliefdyn: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
