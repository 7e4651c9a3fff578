fn main() {
    std::process::exit(softarm::cli::main_with_args(std::env::args_os()));
}
