use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ridge_lab::cli::run() as u8)
}
