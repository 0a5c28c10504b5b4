fn main() {
    std::process::exit(aquamass::pipeline::cli::run(std::env::args_os()));
}
