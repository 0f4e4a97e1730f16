fn main() {
    std::process::exit(hyperell::cli::run(std::env::args_os()));
}
