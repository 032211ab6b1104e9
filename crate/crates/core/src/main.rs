fn main() {
    std::process::exit(toporouter::cli::run_from(std::env::args_os()));
}
