fn main() {
    std::process::exit(xxz_dressed::cli::run(std::env::args_os()));
}
