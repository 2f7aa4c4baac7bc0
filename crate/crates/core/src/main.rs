fn main() {
    std::process::exit(sprlab::cli::main_with_args(std::env::args_os()));
}
