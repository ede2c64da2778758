fn main() {
    std::process::exit(scatterlab::cli::main_with(std::env::args_os()));
}
