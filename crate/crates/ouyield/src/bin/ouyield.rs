fn main() {
    std::process::exit(ouyield::cli::run(std::env::args_os()));
}
