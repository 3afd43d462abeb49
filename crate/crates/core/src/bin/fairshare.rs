fn main() {
    std::process::exit(fairshare::cli::run_from(std::env::args_os()));
}
