use std::process::ExitCode;

fn main() -> ExitCode {
    parareal_dae::cli::main()
}
