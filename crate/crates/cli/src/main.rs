fn main() {
    std::process::exit(rfk::main_with_args(std::env::args_os()));
}
