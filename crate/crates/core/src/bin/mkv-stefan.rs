fn main() {
    std::process::exit(mkv_stefan::cli::run(std::env::args_os()));
}
