fn main() {
    std::process::exit(smib_cli::run(std::env::args_os()));
}
