fn main() {
    std::process::exit(gmrobust::cli::run(std::env::args_os()));
}
