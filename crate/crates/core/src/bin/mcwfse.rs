fn main() {
    std::process::exit(mcwfse::cli::run_cli(std::env::args_os()));
}
