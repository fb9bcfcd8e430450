fn main() {
    let code = genflow_cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
