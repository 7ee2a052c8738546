fn main() -> std::process::ExitCode {
    eulersieve::cli::run(std::env::args_os())
}
