fn main() {
    std::process::exit(emrt::cli::run(std::env::args_os()));
}
