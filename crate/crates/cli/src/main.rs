fn main() {
    std::process::exit(space_cli::run(std::env::args_os()));
}
