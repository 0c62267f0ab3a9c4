fn main() -> std::process::ExitCode {
    fpr_mimo::cli::main_with_args(std::env::args_os())
}
