use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stderr = io::stderr();
    let cli = match volest_cli::parse(std::env::args_os(), &mut stderr) {
        Ok(cli) => cli,
        Err(code) => return ExitCode::from(code as u8),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .init();
    let code = volest_cli::execute(cli, &mut io::stdout().lock(), &mut stderr);
    ExitCode::from(code as u8)
}
