fn main() {
    std::process::exit(docdecomp_cli::main_with_args(std::env::args_os()));
}
