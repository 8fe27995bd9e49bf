fn main() {
    std::process::exit(mdim::cli_harness::main_with_args(std::env::args_os()));
}
