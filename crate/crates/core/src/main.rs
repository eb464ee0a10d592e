mod cli;

use std::io::Write;
use std::process::ExitCode;

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| {
            let level = match record.level() {
                log::Level::Warn => "warning".to_string(),
                l => l.as_str().to_ascii_lowercase(),
            };
            writeln!(buf, "semtext: {level}: {}", record.args())
        })
        .init();
}

fn main() -> ExitCode {
    let outcome = cli::parse(std::env::args_os().collect()).and_then(|cli| match cli {
        Some(cli) => {
            init_logging(cli.verbose, cli.quiet);
            cli::run(cli)
        }
        None => Ok(()),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let msg = failure.message();
            if msg.starts_with("error:") {
                eprintln!("{msg}");
            } else {
                eprintln!("semtext: {msg}");
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
