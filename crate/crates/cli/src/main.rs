fn main() -> std::process::ExitCode {
    hetdiff_cli::run()
}
