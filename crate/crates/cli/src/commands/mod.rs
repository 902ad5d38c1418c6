pub mod compare;
pub mod fit;
pub mod report;
pub mod run;
pub mod simulate;
pub mod validate;

use anyhow::{bail, Result};
use metacog_core::metad::{CellPaddingPolicy, FitOptions};
use metacog_core::sdt::EdgeCorrectionPolicy;

pub fn parse_edge_correction(name: &str) -> Result<EdgeCorrectionPolicy> {
    Ok(match name {
        "never" => EdgeCorrectionPolicy::Never,
        "when-degenerate" => EdgeCorrectionPolicy::WhenDegenerate,
        "always" => EdgeCorrectionPolicy::Always,
        other => bail!("unknown edge-correction policy {other:?} (never | when-degenerate | always)"),
    })
}

pub fn parse_cell_padding(name: &str) -> Result<CellPaddingPolicy> {
    Ok(match name {
        "never" => CellPaddingPolicy::Never,
        "when-degenerate" => CellPaddingPolicy::WhenDegenerate,
        "always" => CellPaddingPolicy::Always,
        other => bail!("unknown cell-padding policy {other:?} (never | when-degenerate | always)"),
    })
}

pub fn fit_options(edge: &str, padding: &str, max_evals: usize) -> Result<FitOptions> {
    Ok(FitOptions {
        edge_correction: parse_edge_correction(edge)?,
        cell_padding: parse_cell_padding(padding)?,
        max_evals,
        ..Default::default()
    })
}

/// Parse a comma-separated list of reals (criteria vectors, ROPE bounds).
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| anyhow::anyhow!("{part:?} is not a number in list {text:?}"))
        })
        .collect()
}
