fn main() {
    std::process::exit(divlab::cli::main_with_args(std::env::args_os()));
}
