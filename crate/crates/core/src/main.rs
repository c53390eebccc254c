fn main() {
    std::process::exit(resource_logic::cli::run(std::env::args_os()));
}
