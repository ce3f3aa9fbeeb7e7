fn main() {
    std::process::exit(sgec::cli::main_with_args(std::env::args_os()));
}
