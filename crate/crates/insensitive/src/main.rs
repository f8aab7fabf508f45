fn main() {
    std::process::exit(insensitive::cli::run(std::env::args_os()));
}
