fn main() {
    std::process::exit(recordchar::cli::main_with_args(std::env::args_os()));
}
