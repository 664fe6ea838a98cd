fn main() {
    std::process::exit(l1pph::cli::run(std::env::args_os()));
}
