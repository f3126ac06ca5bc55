fn main() {
    std::process::exit(fairsample::cli::run(std::env::args_os()));
}
