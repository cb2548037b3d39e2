fn main() {
    std::process::exit(beqpt::cli::main_with_args(std::env::args_os()));
}
