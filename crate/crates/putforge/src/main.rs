fn main() {
    std::process::exit(putforge::cli::run());
}
