fn main() {
    std::process::exit(subdiff::cli::main_with_args(std::env::args_os()));
}
