fn main() {
    std::process::exit(sgc::cli::run(std::env::args()));
}
