fn main() {
    std::process::exit(aspamg::cli::run(std::env::args_os()));
}
