fn main() {
    std::process::exit(imp_core::cli::main_with_args(std::env::args_os()));
}
