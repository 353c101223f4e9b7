fn main() {
    std::process::exit(ctrltree::cli::run_cli(std::env::args_os()));
}
