fn main() {
    std::process::exit(rhls::cli::run(std::env::args_os()));
}
