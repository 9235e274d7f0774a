fn main() {
    std::process::exit(macbig_cli::run(std::env::args_os()));
}
