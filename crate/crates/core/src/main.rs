fn main() {
    std::process::exit(qd_reach::bench::cli::run(std::env::args_os()));
}
