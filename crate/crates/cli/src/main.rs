fn main() {
    std::process::exit(singsym_cli::main_with_args(std::env::args_os()));
}
