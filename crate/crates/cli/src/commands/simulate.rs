use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use metacog_core::sim::{simulate_counts, ObserverSpec, SimOptions};

use super::parse_f64_list;

#[derive(Args)]
pub struct SimulateArgs {
    /// Type 1 sensitivity of the generating observer.
    #[arg(long = "d-prime", allow_hyphen_values = true)]
    d_prime: f64,
    /// Type 1 criterion.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c: f64,
    /// Type 2 sensitivity; defaults to d' (an ideal observer).
    #[arg(long = "meta-d", allow_hyphen_values = true)]
    meta_d: Option<f64>,
    /// Comma-separated type 2 criteria below meta-c (ascending).
    #[arg(long = "t2-s1", allow_hyphen_values = true)]
    t2_s1: String,
    /// Comma-separated type 2 criteria above meta-c (ascending).
    #[arg(long = "t2-s2", allow_hyphen_values = true)]
    t2_s2: String,
    #[arg(long = "n-trials", default_value_t = 10_000)]
    n_trials: u64,
    /// S1 presentations (default: half the trials).
    #[arg(long = "n-s1")]
    n_s1: Option<u64>,
    /// Pin type 1 counts to their rounded expectations.
    #[arg(long = "deterministic-type1")]
    deterministic_type1: bool,
    /// Use rounded expected rating counts instead of sampling them.
    #[arg(long = "no-sample-type2")]
    no_sample_type2: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Counts CSV destination; a JSON sidecar lands next to it.
    #[arg(long, short)]
    out: PathBuf,
    /// Print the machine-readable summary instead of prose.
    #[arg(long)]
    json: bool,
}

pub fn run(args: SimulateArgs) -> Result<u8> {
    let t2_s1 = parse_f64_list(&args.t2_s1)?;
    let t2_s2 = parse_f64_list(&args.t2_s2)?;
    let spec = ObserverSpec::new(
        args.d_prime,
        args.c,
        args.meta_d.unwrap_or(args.d_prime),
        t2_s1,
        t2_s2,
    )?;
    let opts = SimOptions {
        n_trials: args.n_trials,
        n_s1: args.n_s1,
        deterministic_type1: args.deterministic_type1,
        sample_type2: !args.no_sample_type2,
        seed: args.seed,
    };
    let counts = simulate_counts(&spec, &opts)?;
    counts.write_csv(&args.out).with_context(|| format!("writing {}", args.out.display()))?;

    let sidecar = args.out.with_extension("meta.json");
    let meta = serde_json::json!({ "spec": spec, "opts": opts, "seed": opts.seed });
    std::fs::write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")
        .with_context(|| format!("writing {}", sidecar.display()))?;

    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "out": args.out,
                "sidecar": sidecar,
                "n_trials": counts.n_total(),
                "h": counts.h(),
            })
        );
    } else {
        println!(
            "wrote {} trials (h = {}) to {}; sidecar {}",
            counts.n_total(),
            counts.h(),
            args.out.display(),
            sidecar.display()
        );
    }
    Ok(0)
}
