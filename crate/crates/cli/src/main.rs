//! Batch experiment runner for the intermittent-map laboratory.
//!
//! Usage: ergomix --config PATH [--output DIR] [--seed N]
//!
//! Exit codes: 0 all verdicts pass, 1 verdict failure, 2 configuration
//! error, 3 runtime error. ERGOMIX_THREADS overrides the worker count.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

struct Args {
    config: PathBuf,
    output: Option<PathBuf>,
    seed: Option<u64>,
}

fn parse_args() -> Result<Args, String> {
    let mut config = None;
    let mut output = None;
    let mut seed = None;
    let mut it = std::env::args().skip(1);
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                config = Some(PathBuf::from(
                    it.next().ok_or("--config needs a path")?,
                ))
            }
            "--output" => {
                output = Some(PathBuf::from(
                    it.next().ok_or("--output needs a directory")?,
                ))
            }
            "--seed" => {
                let v = it.next().ok_or("--seed needs an integer")?;
                seed = Some(v.parse().map_err(|_| format!("bad seed '{v}'"))?);
            }
            "--help" | "-h" => {
                println!("usage: ergomix --config PATH [--output DIR] [--seed N]");
                std::process::exit(0);
            }
            other => return Err(format!("unknown argument '{other}'")),
        }
    }
    Ok(Args {
        config: config.ok_or("missing required --config PATH")?,
        output,
        seed,
    })
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = args.output {
        cfg.output_dir = dir;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    // worker count: env var beats the config knob; zero means "let the
    // scheduler decide". Results are worker-count independent.
    let workers = std::env::var("ERGOMIX_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(cfg.workers);
    if workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }

    match runner::run(&cfg) {
        Ok(outcome) => {
            for v in &outcome.verdicts {
                println!(
                    "verdict {} {}: {}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.name,
                    v.detail
                );
            }
            if outcome.all_pass() {
                println!("overall = PASS");
                ExitCode::SUCCESS
            } else {
                println!("overall = FAIL");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("runtime error: {e}");
            ExitCode::from(3)
        }
    }
}
