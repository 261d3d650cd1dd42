fn main() {
    std::process::exit(casimir_work::cli::main());
}
