fn main() {
    std::process::exit(multimodal_early::cli::run(std::env::args_os()));
}
