fn main() {
    std::process::exit(trizero::cli::main_with_args(std::env::args_os()));
}
