fn main() {
    std::process::exit(appraisal::cli::run(std::env::args_os()));
}
