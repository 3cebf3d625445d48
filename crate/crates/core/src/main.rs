fn main() {
    let code = scheme_lab::cli::run(std::env::args_os());
    std::process::exit(code);
}
