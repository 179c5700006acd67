fn main() {
    std::process::exit(toeplitz_rigidity::cli::main_with_args(std::env::args_os()));
}
