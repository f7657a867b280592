fn main() {
    std::process::exit(gframe_cli::main_with_args(std::env::args_os()));
}
