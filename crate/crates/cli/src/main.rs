fn main() {
    std::process::exit(concentra_cli::run(std::env::args_os().collect()));
}
