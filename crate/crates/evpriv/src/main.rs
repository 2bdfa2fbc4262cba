fn main() {
    std::process::exit(evpriv::cli::run(std::env::args_os()));
}
