fn main() {
    std::process::exit(unilift::cli::main_with_args(std::env::args_os()));
}
