fn main() {
    std::process::exit(netmoment::cli::run_cli(std::env::args_os()));
}
