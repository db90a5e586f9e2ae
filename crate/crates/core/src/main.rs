fn main() {
    std::process::exit(weathercat::cli::run(std::env::args_os()));
}
