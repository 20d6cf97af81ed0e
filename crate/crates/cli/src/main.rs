use std::process::ExitCode;

use prandtl_gevrey::commands::dispatch;
use prandtl_gevrey::config::{help, parse_args};
use prandtl_gevrey::{CliError, EXIT_OK, EXIT_VERDICT_FAILED};

fn set_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PRANDTL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("PRANDTL_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run() -> Result<i32, CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h") {
        print!("{}", help());
        return Ok(if args.is_empty() { 2 } else { EXIT_OK });
    }
    set_threads()?;
    let inv = parse_args(args)?;
    let out = dispatch(&inv)?;
    println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary serializes"));
    Ok(if out.passed { EXIT_OK } else { EXIT_VERDICT_FAILED })
}

fn main() -> ExitCode {
    let code = run().unwrap_or_else(|e| {
        eprintln!("prandtl-gevrey: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
