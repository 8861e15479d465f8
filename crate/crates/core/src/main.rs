fn main() {
    std::process::exit(sdweyl::cli::main_with_args(std::env::args_os()));
}
