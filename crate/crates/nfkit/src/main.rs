fn main() {
    std::process::exit(nfkit::cli::run(std::env::args_os()));
}
