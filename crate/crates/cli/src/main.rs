use std::process::ExitCode;

use clap::Parser;
use twostage_cli::{run, Cli};

fn threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("TWOSTAGE_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("TWOSTAGE_THREADS=`{raw}` is not a thread count"))?;
    if n == 0 {
        return Err("TWOSTAGE_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = threads() {
        eprintln!("usage error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twostage: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
