use std::process::ExitCode;

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    let code = std::panic::catch_unwind(|| delone::cli::run(std::env::args_os())).unwrap_or(2);
    ExitCode::from(code as u8)
}
