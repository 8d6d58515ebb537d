fn main() {
    std::process::exit(needdesk_cli::run(std::env::args_os()));
}
