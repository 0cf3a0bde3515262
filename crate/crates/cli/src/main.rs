fn main() {
    std::process::exit(lttk_cli::run(std::env::args_os()));
}
