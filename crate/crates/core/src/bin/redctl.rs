fn main() {
    std::process::exit(redctl_core::cli::run(std::env::args_os()));
}
