fn main() -> std::process::ExitCode {
    sigdrift::cli::main()
}
