fn main() {
    std::process::exit(netgibbs_cli::run(std::env::args_os()));
}
