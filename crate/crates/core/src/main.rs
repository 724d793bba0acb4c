fn main() {
    std::process::exit(eigenadc::cli::run(std::env::args_os()));
}
