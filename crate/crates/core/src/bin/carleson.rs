fn main() {
    std::process::exit(carleson::cli::run(std::env::args_os()));
}
