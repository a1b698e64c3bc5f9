fn main() {
    std::process::exit(spikerx_cli::run(std::env::args().collect()));
}
