//! The fit-report JSON interchange format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapCi;
use crate::error::Result;
use crate::metad::FitResult;

/// Serialized form of a fit, as written by `fit` and consumed by `compare`
/// and `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub meta_d: f64,
    pub meta_c: f64,
    pub t2_criteria_s1: Vec<f64>,
    pub t2_criteria_s2: Vec<f64>,
    pub d_prime: f64,
    pub c: f64,
    pub c_prime: f64,
    pub m_ratio: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci: Option<CiReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiReport {
    pub statistic: String,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub n_boot: usize,
    pub seed: u64,
}

impl From<&BootstrapCi> for CiReport {
    fn from(ci: &BootstrapCi) -> CiReport {
        CiReport {
            statistic: ci.statistic.clone(),
            low: ci.low,
            high: ci.high,
            level: ci.level,
            n_boot: ci.n_boot,
            seed: ci.seed,
        }
    }
}

impl FitReport {
    pub fn from_fit(fit: &FitResult) -> FitReport {
        FitReport {
            meta_d: fit.params.meta_d,
            meta_c: fit.params.meta_c,
            t2_criteria_s1: fit.params.t2_criteria_s1.clone(),
            t2_criteria_s2: fit.params.t2_criteria_s2.clone(),
            d_prime: fit.d_prime_type1,
            c: fit.c_type1,
            c_prime: fit.c_type1 / fit.d_prime_type1,
            m_ratio: fit.m_ratio,
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
            iterations: fit.iterations,
            ci: None,
        }
    }

    pub fn with_ci(mut self, ci: &BootstrapCi) -> FitReport {
        self.ci = Some(ci.into());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<FitReport> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
