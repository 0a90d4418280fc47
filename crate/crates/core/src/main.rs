fn main() {
    std::process::exit(ctplan::cli::run());
}
