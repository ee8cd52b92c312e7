fn main() {
    std::process::exit(pivotbsp_cli::run_cli(std::env::args_os()));
}
