fn main() {
    std::process::exit(gcibc::cli::main());
}
