fn main() -> std::process::ExitCode {
    absa_core::cli::main()
}
