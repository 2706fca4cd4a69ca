fn main() {
    std::process::exit(ssflow::cli::run(std::env::args_os()));
}
