//! Closed-form equal-variance SDT metrics from type 1 response counts.
//!
//! The generative picture: stimulus S1 draws internal evidence from
//! N(-d'/2, 1), S2 from N(+d'/2, 1), and the agent responds S2 whenever the
//! evidence exceeds the criterion c. Then
//!
//! ```text
//! d' = z(HR) - z(FAR)          c  = -(z(HR) + z(FAR)) / 2          c' = c / d'
//! ```
//!
//! with HR = P(respond S2 | S2) and FAR = P(respond S2 | S1).

use serde::{Deserialize, Serialize};

use crate::counts::Type1Counts;
use crate::error::{Error, Result};
use crate::math::z;

/// How to handle hit/false-alarm rates of exactly 0 or 1, which the
/// z-transform cannot take. The log-linear rule replaces k/n with
/// (k + 0.5)/(n + 1) for the affected stimulus row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeCorrectionPolicy {
    /// Never correct; degenerate rates are an error.
    Never,
    /// Correct only the rows whose raw rate is 0 or 1 (the default); healthy
    /// rows keep their exact raw proportions.
    #[default]
    WhenDegenerate,
    /// Correct every row unconditionally.
    Always,
}

/// Hit and false-alarm rates from type 1 counts, under an edge-correction
/// policy. Both rates come back strictly inside (0, 1) or the call errors.
pub fn type1_rates(counts: &Type1Counts, policy: EdgeCorrectionPolicy) -> Result<(f64, f64)> {
    let hr = corrected_rate(counts.n_s2_resp_s2 as f64, counts.n_s2() as f64, policy)
        .ok_or(Error::EmptyStimulusClass(crate::counts::StimulusClass::S2))?;
    let far = corrected_rate(counts.n_s1_resp_s2 as f64, counts.n_s1() as f64, policy)
        .ok_or(Error::EmptyStimulusClass(crate::counts::StimulusClass::S1))?;
    check_open_unit(hr)?;
    check_open_unit(far)?;
    Ok((hr, far))
}

/// Rate k/n under the policy; `None` when the row is empty. Also used on
/// fractional marginal sums, where "degenerate" still means exactly 0 or n.
pub(crate) fn corrected_rate(k: f64, n: f64, policy: EdgeCorrectionPolicy) -> Option<f64> {
    if n < 1.0 {
        return None;
    }
    let correct = match policy {
        EdgeCorrectionPolicy::Never => false,
        EdgeCorrectionPolicy::WhenDegenerate => k == 0.0 || k == n,
        EdgeCorrectionPolicy::Always => true,
    };
    Some(if correct { (k + 0.5) / (n + 1.0) } else { k / n })
}

fn check_open_unit(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityDomain(p))
    }
}

/// Type 1 sensitivity d' = z(HR) - z(FAR).
pub fn d_prime(hr: f64, far: f64) -> Result<f64> {
    Ok(z(hr)? - z(far)?)
}

/// Type 1 criterion c = -(z(HR) + z(FAR)) / 2.
pub fn criterion_c(hr: f64, far: f64) -> Result<f64> {
    Ok(-0.5 * (z(hr)? + z(far)?))
}

/// Sensitivity-normalized criterion c' = c / d'; undefined at d' = 0.
pub fn c_prime(c: f64, d_prime: f64) -> Result<f64> {
    if d_prime == 0.0 {
        return Err(Error::UndefinedCPrime);
    }
    Ok(c / d_prime)
}

/// The full set of closed-form type 1 statistics for one counts table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Type1Stats {
    pub hr: f64,
    pub far: f64,
    pub d_prime: f64,
    pub c: f64,
    /// `None` when d' = 0 leaves the normalized criterion undefined.
    pub c_prime: Option<f64>,
}

impl Type1Stats {
    pub fn from_counts(counts: &Type1Counts, policy: EdgeCorrectionPolicy) -> Result<Type1Stats> {
        let (hr, far) = type1_rates(counts, policy)?;
        Type1Stats::from_rates(hr, far)
    }

    pub fn from_rates(hr: f64, far: f64) -> Result<Type1Stats> {
        let d = d_prime(hr, far)?;
        let c = criterion_c(hr, far)?;
        Ok(Type1Stats { hr, far, d_prime: d, c, c_prime: c_prime(c, d).ok() })
    }
}
