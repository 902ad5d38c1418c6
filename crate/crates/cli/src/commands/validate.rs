use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use metacog_core::StimulusClass;
use metacog_harness::{load_dataset, TaskKind, TaskSpec};

#[derive(Args)]
pub struct ValidateArgs {
    /// Dataset file (TSV or CSV with a header row).
    dataset: PathBuf,
    /// Task kind: a_sentiment | b_oral_written | c_word_depletion.
    #[arg(long)]
    task: String,
    #[arg(long)]
    text_field: Option<String>,
    #[arg(long)]
    label_field: Option<String>,
    #[arg(long)]
    json: bool,
}

pub fn run(args: ValidateArgs) -> Result<u8> {
    let kind = TaskKind::parse(&args.task)
        .with_context(|| format!("unknown task {:?}", args.task))?;
    let spec = TaskSpec {
        kind,
        dataset_path: args.dataset.clone(),
        text_field: args.text_field.clone(),
        label_field: args.label_field.clone(),
    };
    let items = load_dataset(&spec)?;
    let n_s1 = items.iter().filter(|i| i.label == StimulusClass::S1).count();
    let n_s2 = items.len() - n_s1;

    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "dataset": args.dataset,
                "task": kind.name(),
                "items": items.len(),
                "n_s1": n_s1,
                "n_s2": n_s2,
            })
        );
    } else {
        println!(
            "{}: {} items ({} S1 / {} S2), labels valid",
            args.dataset.display(),
            items.len(),
            n_s1,
            n_s2
        );
    }
    Ok(0)
}
