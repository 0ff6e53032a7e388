fn main() {
    std::process::exit(fedsel::cli::main_with_args(std::env::args_os()));
}
