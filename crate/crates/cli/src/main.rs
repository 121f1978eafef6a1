fn main() {
    std::process::exit(riscov_cli::run(std::env::args_os()));
}
