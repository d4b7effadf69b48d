fn main() {
    std::process::exit(memvec::harness::cli::run(std::env::args_os()));
}
