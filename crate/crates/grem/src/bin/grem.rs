fn main() {
    std::process::exit(grem::cli::main_from_args(std::env::args()));
}
