fn main() {
    std::process::exit(pt_hybrid::cli::main_with_args(std::env::args_os()));
}
