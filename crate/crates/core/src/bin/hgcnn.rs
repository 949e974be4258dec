fn main() {
    std::process::exit(hgcnn::cli::run(std::env::args_os()));
}
