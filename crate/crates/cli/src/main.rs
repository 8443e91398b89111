fn main() {
    std::process::exit(dlra_cli::run(std::env::args_os()));
}
