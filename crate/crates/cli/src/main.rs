fn main() {
    std::process::exit(acmc_cli::execute());
}
