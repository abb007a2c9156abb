fn main() {
    std::process::exit(hillspec::cli::run());
}
