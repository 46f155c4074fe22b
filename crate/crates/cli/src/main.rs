fn main() {
    std::process::exit(stefan_cli::run_cli(std::env::args_os()));
}
