use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use maxweight::cli::{exit_code, load_spec, run_loaded, ExperimentPlan, Mode, PolicyChoice, RunOutcome};
use maxweight::Result;

/// Simulate the QLA controller and check its drift, duality and bound claims.
#[derive(Debug, Parser)]
#[command(name = "maxweight", version)]
struct Args {
    /// Network spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Comma-separated V values, each at least 1.
    #[arg(long = "V", value_delimiter = ',', default_value = "1")]
    v: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    horizon: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Seed of replication 0; replication k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyChoice::Qla)]
    policy: PolicyChoice,
    /// Start state label (defaults to the reference state).
    #[arg(long)]
    start: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let plan = ExperimentPlan {
        spec_path: args.spec,
        mode: args.mode,
        vs: args.v,
        horizon: args.horizon,
        replications: args.reps,
        seed_base: args.seed,
        out_dir: args.out,
        policy: args.policy,
        start_state: args.start,
    };
    match execute(&plan) {
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("FAILED {f}");
            }
            for a in &outcome.artifacts {
                println!("{}", a.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn execute(plan: &ExperimentPlan) -> Result<RunOutcome> {
    plan.validate()?;
    let loaded = load_spec(&plan.spec_path)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let outcome = run_loaded(plan, &loaded)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    Ok(outcome)
}
