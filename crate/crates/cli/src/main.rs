use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use subordlab::runner::{list_catalog, render_catalog, run_config, write_outputs, Config, RunError};

/// Run subordinator limit experiments described by a JSON config.
#[derive(Debug, Parser)]
#[command(name = "subordlab", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long, required_unless_present = "list")]
    config: Option<PathBuf>,
    /// Directory for report.json and CSV curves.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override; beats the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Used when neither --seed nor the config sets a seed.
    #[arg(long = "fallback-seed", env = "SUBORDLAB_SEED", hide = true)]
    env_seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Print the model, transform and criterion inventory.
    #[arg(long)]
    list: bool,
    /// With --list, print JSON instead of text.
    #[arg(long, requires = "list")]
    json: bool,
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("subordlab: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("subordlab: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    if args.list {
        let listing = list_catalog();
        if args.json {
            println!("{}", serde_json::to_string_pretty(&listing).expect("listing serializes"));
        } else {
            print!("{}", render_catalog(&listing));
        }
        return ExitCode::SUCCESS;
    }
    let path = args.config.expect("clap enforces --config");
    let config = match Config::from_path(&path) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let seed = args.seed.or(if config.seed.is_none() { args.env_seed } else { None });
    let report = match run_config(&config, seed) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    match &args.out {
        Some(dir) => {
            if let Err(e) = write_outputs(&report, dir) {
                return fail(e);
            }
        }
        None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    for r in &report.results {
        let mark = match r.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "-",
        };
        let value = r.statistic.or(r.gamma_hat).map_or("-".to_string(), |v| format!("{v:.4e}"));
        let t = r.t.map_or(String::new(), |t| format!(" t={t}"));
        eprintln!("{mark:>4}  {}{t}  {value}", r.experiment);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
