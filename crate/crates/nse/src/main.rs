fn main() { std::process::exit(nse::cli::run(std::env::args_os())) }
