fn main() -> std::process::ExitCode {
    aosi_cli::run(std::env::args_os())
}
