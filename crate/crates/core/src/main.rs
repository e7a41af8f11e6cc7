fn main() {
    std::process::exit(hardy_interp::harness::cli(std::env::args_os()));
}
