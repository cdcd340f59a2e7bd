use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(simplex_map::cli::run())
}
