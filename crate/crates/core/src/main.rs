fn main() {
    let code = godelgen::with_deep_stack(|| {
        let stdout = std::io::stdout();
        let stderr = std::io::stderr();
        godelgen::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
    });
    std::process::exit(code);
}
