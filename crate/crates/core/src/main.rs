fn main() {
    std::process::exit(detrap::cli::main_with_args(std::env::args_os()));
}
