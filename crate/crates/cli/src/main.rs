fn main() {
    std::process::exit(sounder_cli::run(std::env::args_os()));
}
