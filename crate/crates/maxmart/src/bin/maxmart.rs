//! Command-line runner: executes a JSON-configured experiment and writes the
//! per-check CSVs plus the deterministic summary JSON.

use std::path::PathBuf;
use std::process::ExitCode;

use maxmart::models::{simulate, Seed};
use maxmart::paths::path_to_csv;
use maxmart::report::{run, RunConfig};

const USAGE: &str = "\
maxmart — simulation laboratory for max-continuous local martingales

USAGE:
  maxmart run --config PATH [--seed N] [--jobs N] [--out DIR]
  maxmart simulate --config PATH [--n N] [--seed N] [--out DIR]

COMMANDS:
  run        Execute the checks named in the config; writes summary.json and
             per-check CSVs into the output directory. Exit 0 iff every check
             passes, 1 if any fails, 2 on usage/config errors.
  simulate   Generate the config's model batch and write it as paths.csv.

FLAGS:
  --config PATH   JSON run configuration (required)
  --seed N        Override the config's master_seed
  --jobs N        Worker threads (default: MAXMART_JOBS env var, then all
                  cores). Cannot change any result, only the wall time.
  --out DIR       Output directory (default: the config's output_dir)
  --n N           (simulate) number of paths to write (default: 100)
  --help          Show this help
";

struct Cli {
    command: String,
    config: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    n: Option<usize>,
}

fn parse_args() -> Result<Cli, String> {
    let mut args = std::env::args().skip(1);
    let command = match args.next() {
        Some(c) if c == "--help" || c == "-h" => {
            println!("{USAGE}");
            std::process::exit(0);
        }
        Some(c) => c,
        None => return Err("missing command".into()),
    };
    if command != "run" && command != "simulate" {
        return Err(format!("unknown command: {command}"));
    }
    let mut cli =
        Cli { command, config: None, seed: None, jobs: None, out: None, n: None };
    while let Some(arg) = args.next() {
        let mut take = |name: &str| {
            args.next().ok_or_else(|| format!("missing value for {name}"))
        };
        match arg.as_str() {
            "--help" | "-h" => {
                println!("{USAGE}");
                std::process::exit(0);
            }
            "--config" => cli.config = Some(PathBuf::from(take("--config")?)),
            "--seed" => {
                cli.seed = Some(
                    take("--seed")?.parse().map_err(|e| format!("invalid --seed: {e}"))?,
                )
            }
            "--jobs" => {
                let v: usize =
                    take("--jobs")?.parse().map_err(|e| format!("invalid --jobs: {e}"))?;
                if v == 0 {
                    return Err("--jobs must be >= 1".into());
                }
                cli.jobs = Some(v);
            }
            "--out" => cli.out = Some(PathBuf::from(take("--out")?)),
            "--n" => {
                cli.n =
                    Some(take("--n")?.parse().map_err(|e| format!("invalid --n: {e}"))?)
            }
            other => return Err(format!("unknown argument: {other}")),
        }
    }
    if cli.config.is_none() {
        return Err("--config is required".into());
    }
    Ok(cli)
}

fn jobs_from_env() -> Option<usize> {
    std::env::var("MAXMART_JOBS").ok()?.parse().ok().filter(|&n| n > 0)
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let path = cli.config.as_ref().unwrap();
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut config = RunConfig::from_json(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(cli) => cli,
        Err(msg) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let jobs = cli.jobs.or_else(jobs_from_env);

    match cli.command.as_str() {
        "run" => match run(&config, jobs, &out_dir) {
            Ok(output) => {
                print!("{}", output.table);
                println!("wrote {} files to {}", output.files.len(), out_dir.display());
                if output.summary.all_pass() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        "simulate" => {
            let n = cli.n.unwrap_or(100);
            if n == 0 {
                eprintln!("error: --n must be >= 1");
                return ExitCode::from(2);
            }
            if let Err(e) = std::fs::create_dir_all(&out_dir) {
                eprintln!("error: cannot create {}: {e}", out_dir.display());
                return ExitCode::from(2);
            }
            let path = out_dir.join("paths.csv");
            let mut text = String::new();
            for i in 0..n as u64 {
                match simulate(&config.model, Seed::new(config.master_seed, i)) {
                    Ok(p) => text.push_str(&path_to_csv(&p)),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            println!("wrote {n} paths to {}", path.display());
            ExitCode::SUCCESS
        }
        _ => unreachable!(),
    }
}
