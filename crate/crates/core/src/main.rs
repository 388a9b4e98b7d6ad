fn main() {
    std::process::exit(siasim::cli::run(std::env::args_os()));
}
