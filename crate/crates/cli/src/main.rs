fn main() {
    std::process::exit(dimsc_cli::run(std::env::args_os()));
}
