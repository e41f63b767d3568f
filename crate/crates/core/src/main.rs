fn main() {
    let code = coldplasma::cli::run_cli(std::env::args_os().skip(1));
    std::process::exit(code);
}
