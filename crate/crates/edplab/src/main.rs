fn main() {
    std::process::exit(edplab::cli::run_main(std::env::args_os()));
}
