fn main() {
    std::process::exit(diskcert_cli::main_with_args(std::env::args_os()));
}
