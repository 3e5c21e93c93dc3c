fn main() {
    std::process::exit(snse::cli::main_with_args(std::env::args_os()));
}
