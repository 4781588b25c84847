fn main() {
    std::process::exit(bargmann_cli::run(std::env::args_os()));
}
