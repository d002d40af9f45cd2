fn main() {
    std::process::exit(qkdsim::cli::run(std::env::args_os()));
}
