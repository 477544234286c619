fn main() {
    std::process::exit(swipekit::cli::run(std::env::args_os()));
}
