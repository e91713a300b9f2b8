fn main() {
    std::process::exit(fcic::cli::run(std::env::args_os()));
}
