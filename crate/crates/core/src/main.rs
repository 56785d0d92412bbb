fn main() {
    std::process::exit(filterprune::cli::run(std::env::args_os()));
}
