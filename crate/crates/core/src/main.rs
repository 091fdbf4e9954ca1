fn main() -> std::process::ExitCode {
    randual::cli::main_with_args(std::env::args_os())
}
