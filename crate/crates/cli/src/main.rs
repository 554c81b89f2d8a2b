fn main() {
    std::process::exit(dblrot_cli::main_with_args(std::env::args_os()));
}
