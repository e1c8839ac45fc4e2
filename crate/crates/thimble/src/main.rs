fn main() {
    std::process::exit(thimble::cli::run());
}
