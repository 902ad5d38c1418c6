use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use metacog_core::bootstrap::{bootstrap_ci, BootStatistic, BootstrapOptions};
use metacog_core::counts::read_counts_csv;
use metacog_core::metad::fit_meta_d;
use metacog_core::report::FitReport;

use super::fit_options;

#[derive(Args)]
pub struct FitArgs {
    /// Counts CSV with rated data.
    counts: PathBuf,
    #[arg(long, default_value = "when-degenerate")]
    edge_correction: String,
    #[arg(long, default_value = "when-degenerate")]
    cell_padding: String,
    #[arg(long, default_value_t = 100_000)]
    max_evals: usize,
    /// Attach a parametric-bootstrap CI for this statistic
    /// (meta_d | m_ratio | log_m_ratio | d_prime).
    #[arg(long)]
    ci: Option<String>,
    #[arg(long, default_value_t = 1000)]
    n_boot: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit report destination (stdout when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Print the report JSON to stdout even when --out is set.
    #[arg(long)]
    json: bool,
}

pub fn run(args: FitArgs) -> Result<u8> {
    let counts = read_counts_csv(&args.counts)
        .with_context(|| format!("reading {}", args.counts.display()))?
        .into_rated()?;
    let opts = fit_options(&args.edge_correction, &args.cell_padding, args.max_evals)?;
    let fit = fit_meta_d(&counts, &opts)?;

    let mut report = FitReport::from_fit(&fit);
    if let Some(stat_name) = &args.ci {
        let statistic = BootStatistic::parse(stat_name)
            .ok_or_else(|| anyhow::anyhow!("unknown statistic {stat_name:?}"))?;
        let boot_opts = BootstrapOptions {
            n_boot: args.n_boot,
            level: args.level,
            seed: args.seed,
            fit: opts,
            deterministic: false,
        };
        let ci = bootstrap_ci(&counts, statistic, &boot_opts)?;
        report = report.with_ci(&ci);
    }

    match &args.out {
        Some(path) => {
            report.write_json(path).with_context(|| format!("writing {}", path.display()))?;
            if args.json {
                println!("{}", report.to_json()?);
            } else {
                println!(
                    "meta_d = {:.4}, d' = {:.4}, M_ratio = {:.4} ({}) -> {}",
                    report.meta_d,
                    report.d_prime,
                    report.m_ratio,
                    if report.converged { "converged" } else { "NOT converged" },
                    path.display()
                );
            }
        }
        None => println!("{}", report.to_json()?),
    }

    Ok(if report.converged { 0 } else { 3 })
}
