fn main() {
    std::process::exit(swvortex::cli::run(std::env::args_os()));
}
