fn main() {
    std::process::exit(dp_composer::cli::main_with_args(std::env::args_os()));
}
