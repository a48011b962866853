fn main() {
    std::process::exit(riesz_trace::cli::run_cli(std::env::args_os()));
}
