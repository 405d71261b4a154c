fn main() {
    std::process::exit(torifold::cli::run_cli(std::env::args()));
}
