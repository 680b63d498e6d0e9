use clap::Parser;
use fracrb_cli::Flags;

fn main() {
    let code = match Flags::try_parse() {
        Ok(flags) => match flags.resolve() {
            Ok(cfg) => fracrb_cli::run_and_write(&cfg),
            Err(e) => {
                eprintln!("fracrb: {e}");
                e.exit_code()
            }
        },
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            eprintln!("{e}");
            3
        }
    };
    std::process::exit(code);
}
