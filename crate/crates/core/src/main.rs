fn main() {
    std::process::exit(l2betti::cli::main());
}
