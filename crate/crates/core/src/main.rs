fn main() -> std::process::ExitCode {
    frontfill::cli::main_with_args(std::env::args_os())
}
