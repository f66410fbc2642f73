use std::io::Write;

fn main() {
    let result = colearn_cli::run(std::env::args_os());
    print!("{}", result.summary);
    let _ = std::io::stdout().flush();
    eprint!("{}", result.diagnostics);
    std::process::exit(result.exit_code);
}
