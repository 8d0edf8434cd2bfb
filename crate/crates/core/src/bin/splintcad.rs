fn main() {
    std::process::exit(splintcad::cli::run(std::env::args_os()));
}
