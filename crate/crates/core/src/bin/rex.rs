fn main() {
    std::process::exit(rex_core::cli::main_with_args(std::env::args_os()));
}
