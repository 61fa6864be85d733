fn main() {
    std::process::exit(frametop::cli::main_with_args(std::env::args_os()));
}
