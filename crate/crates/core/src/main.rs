fn main() {
    std::process::exit(arccover::cli::main_with_args(std::env::args_os()));
}
