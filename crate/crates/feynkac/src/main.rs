fn main() {
    std::process::exit(feynkac::cli::main_with_args(std::env::args_os()));
}
