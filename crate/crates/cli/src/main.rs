fn main() {
    std::process::exit(blowups_cli::run(std::env::args_os()));
}
