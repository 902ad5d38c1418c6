use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use metacog_core::counts::CountsData;
use metacog_core::math::z;
use metacog_core::report::FitReport;
use metacog_core::sdt::{type1_rates, EdgeCorrectionPolicy, Type1Stats};
use metacog_core::stats::delta_var_c;
use metacog_harness::{read_log, tally, PromptMode, TrialRecord};

#[derive(Args)]
pub struct ReportArgs {
    /// Run directories or individual trial logs / fit reports.
    inputs: Vec<PathBuf>,
    /// Destination directory for the bundle files.
    #[arg(long, visible_alias = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    json: bool,
}

/// Aggregated plot-ready tables. Every row names the file it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub fits: Vec<FitEntry>,
    pub accuracy_series: Vec<AccuracyRow>,
    pub criterion_series: Vec<CriterionRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitEntry {
    pub source: String,
    pub report: FitReport,
}

/// P(correct | confidence) for one run; levels with zero observations are
/// excluded rather than reported as 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub source: String,
    pub model_id: String,
    pub task: String,
    pub risk: String,
    pub confidence: u8,
    pub n: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionRow {
    pub source: String,
    pub model_id: String,
    pub task: String,
    pub risk: String,
    pub n_s1: u64,
    pub n_s2: u64,
    pub hr: f64,
    pub far: f64,
    pub c: f64,
    pub c_ci_low: f64,
    pub c_ci_high: f64,
    pub d_prime: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_prime: Option<f64>,
}

fn accuracy_rows(source: &str, records: &[TrialRecord]) -> Vec<AccuracyRow> {
    let Some(first) = records.first() else { return Vec::new() };
    if first.mode != PromptMode::WithConfidence {
        return Vec::new();
    }
    let mut rows = Vec::new();
    for conf in 1..=metacog_harness::SCALE as u8 {
        let level: Vec<&TrialRecord> =
            records.iter().filter(|r| r.confidence == Some(conf)).collect();
        if level.is_empty() {
            continue;
        }
        let correct = level.iter().filter(|r| r.decision == Some(r.true_label)).count();
        rows.push(AccuracyRow {
            source: source.to_string(),
            model_id: first.model_id.clone(),
            task: first.task.name().to_string(),
            risk: first.risk.name().to_string(),
            confidence: conf,
            n: level.len() as u64,
            accuracy: correct as f64 / level.len() as f64,
        });
    }
    rows
}

fn criterion_row(source: &str, records: &[TrialRecord]) -> Result<CriterionRow> {
    let tallied = tally(records)?;
    let first = records.first().expect("tally rejects empty");
    let t1 = match &tallied.data {
        CountsData::Type1(t1) => *t1,
        CountsData::Rated(r) => r.to_type1_counts()?,
    };
    let (hr, far) = type1_rates(&t1, EdgeCorrectionPolicy::WhenDegenerate)?;
    let stats = Type1Stats::from_rates(hr, far)?;
    let var_c = delta_var_c(hr, far, t1.n_s1(), t1.n_s2())?;
    let half = z(0.975)? * var_c.sqrt();
    Ok(CriterionRow {
        source: source.to_string(),
        model_id: first.model_id.clone(),
        task: first.task.name().to_string(),
        risk: first.risk.name().to_string(),
        n_s1: t1.n_s1(),
        n_s2: t1.n_s2(),
        hr,
        far,
        c: stats.c,
        c_ci_low: stats.c - half,
        c_ci_high: stats.c + half,
        d_prime: stats.d_prime,
        c_prime: stats.c_prime,
    })
}

fn collect_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("reading directory {}", input.display()))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

pub fn build_bundle(inputs: &[PathBuf]) -> Result<ReportBundle> {
    let mut bundle =
        ReportBundle { fits: Vec::new(), accuracy_series: Vec::new(), criterion_series: Vec::new() };
    for path in collect_files(inputs)? {
        let source = path.display().to_string();
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => {
                let (_, records) = read_log(&path)
                    .with_context(|| format!("reading trial log {}", path.display()))?;
                bundle.accuracy_series.extend(accuracy_rows(&source, &records));
                bundle.criterion_series.push(
                    criterion_row(&source, &records)
                        .with_context(|| format!("tallying {}", path.display()))?,
                );
            }
            Some("json") => {
                // fit reports mingle with sidecar metadata; only well-formed
                // reports join the table
                if let Ok(report) = FitReport::read_json(&path) {
                    bundle.fits.push(FitEntry { source, report });
                }
            }
            _ => {}
        }
    }
    if bundle.fits.is_empty() && bundle.accuracy_series.is_empty() && bundle.criterion_series.is_empty()
    {
        bail!("no trial logs or fit reports found in the inputs");
    }
    Ok(bundle)
}

fn write_accuracy_csv(path: &Path, rows: &[AccuracyRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["source", "model_id", "task", "risk", "confidence", "n", "accuracy"])?;
    for r in rows {
        writer.write_record([
            r.source.as_str(),
            r.model_id.as_str(),
            r.task.as_str(),
            r.risk.as_str(),
            &r.confidence.to_string(),
            &r.n.to_string(),
            &format!("{:.6}", r.accuracy),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn write_criterion_csv(path: &Path, rows: &[CriterionRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "source", "model_id", "task", "risk", "n_s1", "n_s2", "hr", "far", "c", "c_ci_low",
        "c_ci_high", "d_prime", "c_prime",
    ])?;
    for r in rows {
        writer.write_record([
            r.source.as_str(),
            r.model_id.as_str(),
            r.task.as_str(),
            r.risk.as_str(),
            &r.n_s1.to_string(),
            &r.n_s2.to_string(),
            &format!("{:.6}", r.hr),
            &format!("{:.6}", r.far),
            &format!("{:.6}", r.c),
            &format!("{:.6}", r.c_ci_low),
            &format!("{:.6}", r.c_ci_high),
            &format!("{:.6}", r.d_prime),
            &r.c_prime.map(|v| format!("{v:.6}")).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Re-read an emitted CSV and check its own schema: header, column count,
/// and numeric columns.
fn self_validate_csv(path: &Path, expected_header: &[&str], numeric_from: usize) -> Result<()> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected_header {
        bail!("{}: header drifted from its schema", path.display());
    }
    for record in reader.records() {
        let record = record?;
        if record.len() != expected_header.len() {
            bail!("{}: ragged row", path.display());
        }
        for field in record.iter().skip(numeric_from) {
            if !field.is_empty() && field.parse::<f64>().is_err() {
                bail!("{}: non-numeric value {field:?}", path.display());
            }
        }
    }
    Ok(())
}

pub fn run(args: ReportArgs) -> Result<u8> {
    if args.inputs.is_empty() {
        bail!("no inputs given");
    }
    let bundle = build_bundle(&args.inputs)?;
    std::fs::create_dir_all(&args.out_dir)?;

    let bundle_path = args.out_dir.join("report_bundle.json");
    std::fs::write(&bundle_path, serde_json::to_string_pretty(&bundle)? + "\n")?;

    let accuracy_path = args.out_dir.join("accuracy_by_confidence.csv");
    write_accuracy_csv(&accuracy_path, &bundle.accuracy_series)?;
    self_validate_csv(
        &accuracy_path,
        &["source", "model_id", "task", "risk", "confidence", "n", "accuracy"],
        4,
    )?;

    let criterion_path = args.out_dir.join("criterion_by_risk.csv");
    write_criterion_csv(&criterion_path, &bundle.criterion_series)?;
    self_validate_csv(
        &criterion_path,
        &[
            "source", "model_id", "task", "risk", "n_s1", "n_s2", "hr", "far", "c", "c_ci_low",
            "c_ci_high", "d_prime", "c_prime",
        ],
        4,
    )?;

    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "bundle": bundle_path,
                "accuracy_csv": accuracy_path,
                "criterion_csv": criterion_path,
                "n_fits": bundle.fits.len(),
                "n_accuracy_rows": bundle.accuracy_series.len(),
                "n_criterion_rows": bundle.criterion_series.len(),
            })
        );
    } else {
        println!(
            "bundle: {} fits, {} accuracy rows, {} criterion rows -> {}",
            bundle.fits.len(),
            bundle.accuracy_series.len(),
            bundle.criterion_series.len(),
            args.out_dir.display()
        );
    }
    Ok(0)
}
