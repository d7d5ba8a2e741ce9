use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cuspcone::cli::{load_config, run_command, Command, USAGE};

#[derive(Parser, Debug)]
#[command(name = "cuspcone", version, about = "Anti-periodic problems on cusped cones", override_usage = USAGE)]
struct Args {
    /// solve | verify-hypotheses | sweep-lambda | converge-tn | oracle-compare | kernel-table
    command: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated shifts for sweep-lambda.
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    nmax: Option<usize>,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}\n{USAGE}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Ok(cmd) = Command::parse(&args.command) else {
        return usage_error(format!("unknown command `{}`", args.command));
    };
    let mut cfg = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if let Some(s) = args.seed {
        cfg.solver.seed = s;
    }
    if let Some(l) = args.lambda {
        cfg.solver.lambda = Some(l);
    }
    if let Some(n) = args.nmax {
        cfg.n_max = n;
    }
    if let Some(ls) = &args.lambdas {
        if let Err(e) = cfg.set("lambdas", ls) {
            return usage_error(e);
        }
    }
    if let Err(e) = cfg.validate() {
        return usage_error(e);
    }
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return usage_error(e);
        }
    }
    match run_command(cmd, &cfg) {
        Ok(m) => {
            for c in &m.checks {
                println!("{:<28} {:.6e} ({}) {}", c.name, c.value, c.bound, if c.passed { "pass" } else { "FAIL" });
            }
            println!("output in {}", cfg.out.display());
            if m.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{} failed: {e}", cmd.name());
            ExitCode::from(1)
        }
    }
}
