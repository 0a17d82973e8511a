fn main() {
    std::process::exit(netra_core::cli::main_with_args(std::env::args_os()));
}
