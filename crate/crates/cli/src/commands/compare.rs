use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use metacog_core::bootstrap::{bootstrap_diff_ci, BootStatistic, BootstrapOptions};
use metacog_core::counts::{read_counts_csv, CountsData};
use metacog_core::math::z;
use metacog_core::report::FitReport;
use metacog_core::sdt::type1_rates;
use metacog_core::stats::{rope_classify, z_test, ComparisonResult, DeltaEstimate, Interval, Rope};
use metacog_core::Type1Counts;

use super::{fit_options, parse_f64_list};

#[derive(Args)]
pub struct CompareArgs {
    /// First input: counts CSV or fit-report JSON.
    a: PathBuf,
    /// Second input, same kind as the first. The difference is a - b.
    b: PathBuf,
    /// Statistic to compare: d_prime | c | meta_d | m_ratio | log_m_ratio.
    #[arg(long, default_value = "d_prime")]
    stat: String,
    /// Pairwise comparisons for the Bonferroni correction.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// ROPE bounds "low,high"; defaults to [-0.05, 0.05] for log_m_ratio
    /// and [-0.1, 0.1] otherwise.
    #[arg(long, allow_hyphen_values = true)]
    rope: Option<String>,
    #[arg(long, default_value = "when-degenerate")]
    edge_correction: String,
    #[arg(long, default_value = "when-degenerate")]
    cell_padding: String,
    /// Bootstrap replicates for meta-level statistics on counts inputs.
    #[arg(long, default_value_t = 1000)]
    n_boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the ComparisonResult JSON here as well as stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Emit only the JSON (suppress the verdict line).
    #[arg(long)]
    json: bool,
}

fn default_rope(stat: &str) -> Rope {
    if stat == "log_m_ratio" {
        Rope::log_m_ratio_default()
    } else {
        Rope::effect_default()
    }
}

fn is_counts(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("csv"))
}

fn type1_of(data: &CountsData) -> Result<Type1Counts> {
    Ok(match data {
        CountsData::Type1(t1) => *t1,
        CountsData::Rated(r) => r.to_type1_counts()?,
    })
}

pub fn run(args: CompareArgs) -> Result<u8> {
    let rope = match &args.rope {
        Some(text) => {
            let bounds = parse_f64_list(text)?;
            if bounds.len() != 2 {
                bail!("--rope expects exactly two bounds, got {text:?}");
            }
            Rope::new(bounds[0], bounds[1])?
        }
        None => default_rope(&args.stat),
    };

    let comparison = if is_counts(&args.a) != is_counts(&args.b) {
        bail!("inputs must both be counts CSVs or both fit reports");
    } else if is_counts(&args.a) {
        compare_counts(&args, &rope)?
    } else {
        compare_reports(&args, &rope)?
    };

    let json = serde_json::to_string_pretty(&comparison)?;
    if let Some(path) = &args.out {
        std::fs::write(path, json.clone() + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{json}");
    if !args.json {
        eprintln!(
            "diff({stat}) = {diff:.4}, z = {z:.3}: {sig} (threshold {thr:.2}); {verdict:?} vs ROPE [{lo}, {hi}]",
            stat = args.stat,
            diff = comparison.diff,
            z = comparison.z,
            sig = if comparison.statistically_significant {
                "statistically significant"
            } else {
                "not statistically significant"
            },
            thr = comparison.threshold,
            verdict = comparison.rope_verdict,
            lo = comparison.rope.low,
            hi = comparison.rope.high,
        );
    }
    Ok(0)
}

fn compare_counts(args: &CompareArgs, rope: &Rope) -> Result<ComparisonResult> {
    let data_a = read_counts_csv(&args.a).with_context(|| format!("reading {}", args.a.display()))?;
    let data_b = read_counts_csv(&args.b).with_context(|| format!("reading {}", args.b.display()))?;
    let opts = fit_options(&args.edge_correction, &args.cell_padding, 100_000)?;

    match args.stat.as_str() {
        // closed-form statistics get Delta-method variances
        "d_prime" | "c" => {
            let estimate = |data: &CountsData| -> Result<DeltaEstimate> {
                let t1 = type1_of(data)?;
                let (hr, far) = type1_rates(&t1, opts.edge_correction)?;
                Ok(match args.stat.as_str() {
                    "d_prime" => DeltaEstimate::d_prime(hr, far, t1.n_s1(), t1.n_s2())?,
                    _ => DeltaEstimate::criterion(hr, far, t1.n_s1(), t1.n_s2())?,
                })
            };
            let a = estimate(&data_a)?;
            let b = estimate(&data_b)?;
            let test = z_test(a.value - b.value, a.variance + b.variance, args.m, args.alpha)?;
            Ok(ComparisonResult::from_z_test(&test, rope))
        }
        // fitted statistics get parametric-bootstrap differences
        "meta_d" | "m_ratio" | "log_m_ratio" => {
            let statistic = BootStatistic::parse(&args.stat).expect("matched above");
            let rated_a = data_a.into_rated()?;
            let rated_b = data_b.into_rated()?;
            let boot = bootstrap_diff_ci(
                &rated_a,
                &rated_b,
                statistic,
                &BootstrapOptions {
                    n_boot: args.n_boot,
                    level: 1.0 - args.alpha,
                    seed: args.seed,
                    fit: opts,
                    deterministic: false,
                },
            )?;
            comparison_from_interval(boot.point, boot.se, boot.low, boot.high, args, rope)
        }
        other => bail!("unknown statistic {other:?} (d_prime | c | meta_d | m_ratio | log_m_ratio)"),
    }
}

/// Compare two fit reports through their stored bootstrap CIs, treating the
/// replicate distribution as normal.
fn compare_reports(args: &CompareArgs, rope: &Rope) -> Result<ComparisonResult> {
    let a = FitReport::read_json(&args.a).with_context(|| format!("reading {}", args.a.display()))?;
    let b = FitReport::read_json(&args.b).with_context(|| format!("reading {}", args.b.display()))?;

    let point = |r: &FitReport| -> Result<f64> {
        Ok(match args.stat.as_str() {
            "d_prime" => r.d_prime,
            "c" => r.c,
            "meta_d" => r.meta_d,
            "m_ratio" => r.m_ratio,
            "log_m_ratio" => r.m_ratio.ln(),
            other => bail!("unknown statistic {other:?}"),
        })
    };
    let se = |r: &FitReport, which: &Path| -> Result<f64> {
        let ci = r.ci.as_ref().ok_or_else(|| {
            anyhow::anyhow!(
                "{} has no stored CI; refit with --ci {}",
                which.display(),
                args.stat
            )
        })?;
        if ci.statistic != args.stat {
            bail!(
                "{} stores a CI for {:?}, not {:?}; refit with --ci {}",
                which.display(),
                ci.statistic,
                args.stat,
                args.stat
            );
        }
        let half = z(1.0 - (1.0 - ci.level) / 2.0)?;
        Ok((ci.high - ci.low) / (2.0 * half))
    };

    let diff = point(&a)? - point(&b)?;
    let var = se(&a, &args.a)?.powi(2) + se(&b, &args.b)?.powi(2);
    let test = z_test(diff, var, args.m, args.alpha)?;
    Ok(ComparisonResult::from_z_test(&test, rope))
}

fn comparison_from_interval(
    diff: f64,
    se: f64,
    low: f64,
    high: f64,
    args: &CompareArgs,
    rope: &Rope,
) -> Result<ComparisonResult> {
    // significance from the bootstrap SE, ROPE verdict from the percentile
    // interval itself
    let test = z_test(diff, se * se, args.m, args.alpha)?;
    let ci = Interval { low, high };
    Ok(ComparisonResult {
        diff,
        z: test.z,
        alpha_corrected: test.alpha_corrected,
        threshold: test.threshold,
        statistically_significant: test.significant,
        ci,
        rope: *rope,
        rope_verdict: rope_classify(ci, rope),
    })
}
