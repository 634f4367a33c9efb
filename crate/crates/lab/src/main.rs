fn main() {
    std::process::exit(simplex_lab::cli::run_cli(std::env::args_os()));
}
