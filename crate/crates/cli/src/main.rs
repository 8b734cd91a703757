fn main() {
    let out = resil_cli::run_args(std::env::args_os());
    if let Some(doc) = &out.stdout {
        print!("{doc}");
    }
    if let Some(err) = &out.stderr {
        eprintln!("{err}");
    }
    std::process::exit(out.code);
}
