fn main() {
    std::process::exit(qsde::cli::run_cli(std::env::args_os()));
}
