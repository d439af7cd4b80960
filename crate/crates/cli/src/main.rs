fn main() {
    std::process::exit(covert_cli::main_with(std::env::args_os()));
}
