fn main() {
    std::process::exit(scqkd::harness::main_with_args(std::env::args_os()));
}
