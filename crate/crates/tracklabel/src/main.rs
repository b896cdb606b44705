fn main() {
    std::process::exit(tracklabel::cli::run(std::env::args_os()));
}
