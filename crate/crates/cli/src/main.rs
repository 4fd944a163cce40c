fn main() {
    std::process::exit(chaoslink_cli::run(std::env::args_os()));
}
