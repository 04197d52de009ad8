fn main() {
    std::process::exit(ambigil_cli::run(std::env::args_os()));
}
