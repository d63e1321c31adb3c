use std::process::ExitCode;

fn main() -> ExitCode {
    match boussinesq_runner::app::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
