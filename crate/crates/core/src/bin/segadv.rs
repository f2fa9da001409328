fn main() {
    std::process::exit(segadv::cli::run(std::env::args_os()));
}
