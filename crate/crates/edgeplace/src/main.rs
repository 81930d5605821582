fn main() {
    std::process::exit(edgeplace::cli::main_with(std::env::args_os()));
}
