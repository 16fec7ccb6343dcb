fn main() {
    std::process::exit(sgcc::cli::main_with_args(std::env::args_os()));
}
