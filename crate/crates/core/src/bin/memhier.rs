fn main() {
    std::process::exit(memhier::cli::main_with_args(std::env::args_os()));
}
