use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(e) = cpkernel::cli::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let code = cpkernel::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
