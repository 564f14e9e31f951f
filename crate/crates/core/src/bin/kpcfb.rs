use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = kpc_feedback::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code)
}
