fn main() {
    std::process::exit(levy_elliptic::cli::run(std::env::args_os()));
}
