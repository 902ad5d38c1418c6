use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use metacog_harness::{
    run_experiment, tally, read_log, PromptMode, RiskConfig, RunConfig, TaskConfig, TaskKind,
};
use metacog_core::counts::CountsData;

#[derive(Args)]
pub struct RunArgs {
    /// Run configuration file (.json or .toml). Flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    endpoint_url: Option<String>,
    #[arg(long)]
    model_id: Option<String>,
    /// Task kind: a_sentiment | b_oral_written | c_word_depletion.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Risk configuration: s1 | none | s2.
    #[arg(long)]
    risk: Option<String>,
    /// Prompt mode: with_confidence | type1_only.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    n_trials: Option<u64>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    template_dir: Option<PathBuf>,
    /// Trial log destination (resumes if it exists).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Skip writing the tallied counts CSV next to the log.
    #[arg(long)]
    no_tally: bool,
    #[arg(long)]
    json: bool,
}

fn build_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => {
            let task = args
                .task
                .as_deref()
                .and_then(TaskKind::parse)
                .context("--task is required without --config")?;
            let dataset = args.dataset.clone().context("--dataset is required without --config")?;
            RunConfig::new(
                args.endpoint_url.clone().context("--endpoint-url is required without --config")?,
                args.model_id.clone().context("--model-id is required without --config")?,
                TaskConfig::new(task, dataset),
            )
        }
    };

    if let Some(v) = &args.endpoint_url {
        cfg.endpoint_url = v.clone();
    }
    if let Some(v) = &args.model_id {
        cfg.model_id = v.clone();
    }
    if let Some(v) = &args.task {
        cfg.task.kind = TaskKind::parse(v).with_context(|| format!("unknown task {v:?}"))?;
    }
    if let Some(v) = &args.dataset {
        cfg.task.dataset_path = v.clone();
    }
    if let Some(v) = &args.risk {
        cfg.risk = RiskConfig::parse(v).with_context(|| format!("unknown risk config {v:?}"))?;
    }
    if let Some(v) = &args.mode {
        cfg.mode = PromptMode::parse(v).with_context(|| format!("unknown mode {v:?}"))?;
    }
    if let Some(v) = args.n_trials {
        cfg.n_trials = Some(v);
    }
    if let Some(v) = args.concurrency {
        cfg.concurrency = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.template_dir {
        cfg.template_dir = Some(v.clone());
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    Ok(cfg)
}

pub fn run(args: RunArgs) -> Result<u8> {
    let cfg = build_config(&args)?;
    let runtime = tokio::runtime::Runtime::new()?;
    let summary = runtime.block_on(run_experiment(&cfg))?;

    let mut tally_path = None;
    if !args.no_tally && summary.valid > 0 {
        let (_, records) = read_log(&summary.log_path)?;
        let tallied = tally(&records)?;
        let path = metacog_harness::trial::counts_path_for(&summary.log_path);
        match &tallied.data {
            CountsData::Rated(counts) => counts.write_csv(&path)?,
            CountsData::Type1(counts) => std::fs::write(&path, counts.to_csv_string())?,
        }
        tally_path = Some(path);
    }

    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "log": summary.log_path,
                "attempted": summary.attempted,
                "valid": summary.valid,
                "invalid": summary.invalid,
                "resumed": summary.resumed,
                "invalid_by_reason": summary.by_reason,
                "transport_failures": summary.transport_failures,
                "counts": tally_path,
            })
        );
    } else {
        println!(
            "{} trials persisted ({} valid, {} invalid, {} resumed) -> {}",
            summary.attempted,
            summary.valid,
            summary.invalid,
            summary.resumed,
            summary.log_path.display()
        );
        for (reason, n) in &summary.by_reason {
            println!("  invalid[{reason}] = {n}");
        }
        if let Some(path) = &tally_path {
            println!("counts -> {}", path.display());
        }
        if !summary.transport_failures.is_empty() {
            println!(
                "{} trials failed at the transport level; rerun the same command to resume",
                summary.transport_failures.len()
            );
        }
    }
    Ok(if summary.transport_failures.is_empty() { 0 } else { 4 })
}
