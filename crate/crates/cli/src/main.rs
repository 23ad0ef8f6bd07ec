use std::path::PathBuf;
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut args = std::env::args_os().skip(1);
    let (Some(path), None) = (args.next(), args.next()) else {
        eprintln!("usage: uzawa-ritz <config-path>");
        return ExitCode::from(1);
    };
    match uzawa_ritz::run_file(&PathBuf::from(path)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uzawa-ritz: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
