fn main() {
    std::process::exit(polarization::cli::run(std::env::args_os()));
}
