fn main() {
    std::process::exit(symentropy::cli::main_with_args(std::env::args_os()));
}
