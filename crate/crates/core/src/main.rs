fn main() {
    std::process::exit(parrondo::cli::main_with_args(std::env::args().collect()));
}
