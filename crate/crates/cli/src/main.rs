fn main() {
    std::process::exit(powersum_cli::run(std::env::args()));
}
