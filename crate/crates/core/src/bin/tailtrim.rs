fn main() -> std::process::ExitCode {
    tailtrim::cli::main()
}
