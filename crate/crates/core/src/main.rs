fn main() {
    std::process::exit(delay_pca::cli::run(std::env::args_os()));
}
