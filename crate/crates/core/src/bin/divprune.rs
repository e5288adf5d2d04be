fn main() {
    std::process::exit(divprune::cli::run(std::env::args_os()));
}
