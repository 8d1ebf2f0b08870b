fn main() {
    std::process::exit(compacton::cli::main_with_args(std::env::args_os()));
}
