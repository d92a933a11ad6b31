fn main() {
    std::process::exit(ctselect::cli::main_with_args(std::env::args_os()));
}
