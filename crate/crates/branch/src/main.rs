fn main() {
    std::process::exit(branch::cli::run(std::env::args_os()));
}
