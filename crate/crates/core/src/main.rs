fn main() {
    std::process::exit(burden_audit::harness::cli::run(std::env::args_os()));
}
