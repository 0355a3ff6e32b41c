fn main() {
    std::process::exit(qclone::cli::run(std::env::args_os()));
}
