fn main() {
    std::process::exit(weylscan::cli::main_with_args(std::env::args_os()));
}
