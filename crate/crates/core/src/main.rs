fn main() {
    std::process::exit(nlep::cli::run_from(std::env::args_os()));
}
