fn main() {
    std::process::exit(coinweigh::cli::run_from_env());
}
