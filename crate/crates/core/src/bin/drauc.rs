fn main() {
    std::process::exit(drauc::cli::main_with_args(std::env::args_os()));
}
