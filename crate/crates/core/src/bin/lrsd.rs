fn main() {
    std::process::exit(lrsd::cli::run(std::env::args_os()));
}
