fn main() {
    std::process::exit(morphquad::cli::main());
}
