fn main() {
    std::process::exit(urbanedge_core::cli::main_with(std::env::args_os()));
}
