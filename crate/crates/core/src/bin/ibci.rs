fn main() {
    std::process::exit(ibci::cli::run(std::env::args_os()));
}
