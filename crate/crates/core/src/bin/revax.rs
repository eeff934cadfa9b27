fn main() -> std::process::ExitCode {
    revax_core::cli::main()
}
