fn main() {
    std::process::exit(mergefree_cli::main_with(std::env::args_os()));
}
