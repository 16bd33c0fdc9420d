fn main() {
    std::process::exit(csr_rag::cli::run(std::env::args_os()));
}
