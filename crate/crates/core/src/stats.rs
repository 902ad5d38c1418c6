//! The statistical-analysis protocol: Delta-method variances for d' and c,
//! Bonferroni-corrected two-sided Z-tests, and ROPE classification that
//! separates practical from merely statistical significance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{normal_pdf, z};

/// A point estimate with its Delta-method variance and the trial counts it
/// came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub value: f64,
    pub variance: f64,
    pub n_s1: u64,
    pub n_s2: u64,
}

impl DeltaEstimate {
    /// d' with its first-order sampling variance.
    pub fn d_prime(hr: f64, far: f64, n_s1: u64, n_s2: u64) -> Result<DeltaEstimate> {
        Ok(DeltaEstimate {
            value: crate::sdt::d_prime(hr, far)?,
            variance: delta_var_dprime(hr, far, n_s1, n_s2)?,
            n_s1,
            n_s2,
        })
    }

    /// Criterion c with its first-order sampling variance.
    pub fn criterion(hr: f64, far: f64, n_s1: u64, n_s2: u64) -> Result<DeltaEstimate> {
        Ok(DeltaEstimate {
            value: crate::sdt::criterion_c(hr, far)?,
            variance: delta_var_c(hr, far, n_s1, n_s2)?,
            n_s1,
            n_s2,
        })
    }
}

fn rate_term(p: f64, n: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityDomain(p));
    }
    if n == 0 {
        return Err(Error::InvalidCounts("delta variance needs >= 1 trial per class".into()));
    }
    let pdf = normal_pdf(z(p)?);
    Ok(p * (1.0 - p) / (n as f64 * pdf * pdf))
}

/// First-order variance of d' = z(HR) - z(FAR):
/// HR(1-HR) / (n_s2 phi(z(HR))^2) + FAR(1-FAR) / (n_s1 phi(z(FAR))^2).
pub fn delta_var_dprime(hr: f64, far: f64, n_s1: u64, n_s2: u64) -> Result<f64> {
    Ok(rate_term(hr, n_s2)? + rate_term(far, n_s1)?)
}

/// First-order variance of c = -(z(HR) + z(FAR)) / 2; one quarter of the
/// d' variance expression.
pub fn delta_var_c(hr: f64, far: f64, n_s1: u64, n_s2: u64) -> Result<f64> {
    Ok(0.25 * (rate_term(hr, n_s2)? + rate_term(far, n_s1)?))
}

/// A closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn new(low: f64, high: f64) -> Result<Interval> {
        if low > high {
            return Err(Error::InvalidInterval { low, high });
        }
        Ok(Interval { low, high })
    }
}

/// Region of practical equivalence: differences inside it are treated as
/// negligible regardless of statistical significance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rope {
    pub low: f64,
    pub high: f64,
}

impl Rope {
    pub fn new(low: f64, high: f64) -> Result<Rope> {
        if !(low < high) {
            return Err(Error::InvalidRope { low, high });
        }
        Ok(Rope { low, high })
    }

    /// Default ROPE for log M_ratio differences: [-0.05, 0.05].
    pub fn log_m_ratio_default() -> Rope {
        Rope { low: -0.05, high: 0.05 }
    }

    /// Default ROPE for d' and c differences: [-0.1, 0.1].
    pub fn effect_default() -> Rope {
        Rope { low: -0.1, high: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RopeVerdict {
    /// CI entirely outside the ROPE.
    PracticallySignificant,
    /// CI entirely inside the ROPE.
    Negligible,
    /// CI overlaps the ROPE boundary (touching counts as overlap).
    Inconclusive,
}

/// Classify a confidence interval against a ROPE by containment.
pub fn rope_classify(ci: Interval, rope: &Rope) -> RopeVerdict {
    if ci.high < rope.low || ci.low > rope.high {
        RopeVerdict::PracticallySignificant
    } else if ci.low > rope.low && ci.high < rope.high {
        RopeVerdict::Negligible
    } else {
        RopeVerdict::Inconclusive
    }
}

/// Outcome of a Bonferroni-corrected two-sided Z-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub diff: f64,
    pub z: f64,
    /// alpha / m_comparisons.
    pub alpha_corrected: f64,
    /// |z| at or above this is significant: z(1 - alpha_corrected / 2).
    pub threshold: f64,
    pub significant: bool,
    /// Unadjusted (1 - alpha) interval for the difference; ROPE comparisons
    /// use this, significance uses the corrected threshold.
    pub ci: Interval,
}

/// Two-sided Z-test of a difference with Bonferroni correction over
/// `m_comparisons`. The reported CI stays at the uncorrected level.
pub fn z_test(diff: f64, var_diff: f64, m_comparisons: usize, alpha: f64) -> Result<ZTest> {
    if !(var_diff > 0.0) {
        return Err(Error::NonPositiveVariance(var_diff));
    }
    if m_comparisons == 0 {
        return Err(Error::InvalidCounts("m_comparisons must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ProbabilityDomain(alpha));
    }
    let se = var_diff.sqrt();
    let z_stat = diff / se;
    let alpha_corrected = alpha / m_comparisons as f64;
    let threshold = z(1.0 - alpha_corrected / 2.0)?;
    let half_width = z(1.0 - alpha / 2.0)? * se;
    Ok(ZTest {
        diff,
        z: z_stat,
        alpha_corrected,
        threshold,
        significant: z_stat.abs() >= threshold,
        ci: Interval { low: diff - half_width, high: diff + half_width },
    })
}

/// A Z-test combined with its ROPE classification — one pairwise
/// comparison's full verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub diff: f64,
    pub z: f64,
    pub alpha_corrected: f64,
    pub threshold: f64,
    pub statistically_significant: bool,
    pub ci: Interval,
    pub rope: Rope,
    pub rope_verdict: RopeVerdict,
}

impl ComparisonResult {
    pub fn from_z_test(test: &ZTest, rope: &Rope) -> ComparisonResult {
        ComparisonResult {
            diff: test.diff,
            z: test.z,
            alpha_corrected: test.alpha_corrected,
            threshold: test.threshold,
            statistically_significant: test.significant,
            ci: test.ci,
            rope: *rope,
            rope_verdict: rope_classify(test.ci, rope),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dprime_variance_at_chance_is_pi_over_n() {
        for n in [100u64, 1000, 10_000] {
            let v = delta_var_dprime(0.5, 0.5, n, n).unwrap();
            assert!((v - std::f64::consts::PI / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_scales_inversely_with_n() {
        let v1 = delta_var_dprime(0.8, 0.2, 500, 500).unwrap();
        let v2 = delta_var_dprime(0.8, 0.2, 1000, 1000).unwrap();
        assert!((v1 / v2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn c_variance_is_quarter_of_dprime_variance() {
        let vd = delta_var_dprime(0.7, 0.25, 900, 1100).unwrap();
        let vc = delta_var_c(0.7, 0.25, 900, 1100).unwrap();
        assert!((vc / vd - 0.25).abs() < 1e-12);
    }

    #[test]
    fn c_half_width_at_protocol_scale() {
        // at the reference observer's rates with 10^4 trials per class the
        // 95% half-width for c lands in a 0.03-0.05 band
        let var = delta_var_c(0.9452, 0.0548, 10_000, 10_000).unwrap();
        let half_width = z(0.975).unwrap() * var.sqrt();
        assert!((0.025..0.05).contains(&half_width), "half width {half_width}");
    }

    #[test]
    fn degenerate_rates_rejected() {
        assert!(delta_var_dprime(1.0, 0.2, 100, 100).is_err());
        assert!(delta_var_c(0.8, 0.0, 100, 100).is_err());
    }

    #[test]
    fn bonferroni_thresholds() {
        let t27 = z_test(0.5, 0.01, 27, 0.05).unwrap().threshold;
        assert!((t27 - 3.1130172634).abs() < 1e-6, "m=27 threshold {t27}");
        assert_eq!(format!("{t27:.2}"), "3.11");
        let t1 = z_test(0.5, 0.01, 1, 0.05).unwrap().threshold;
        assert!((t1 - 1.9599639845).abs() < 1e-6, "m=1 threshold {t1}");
        assert_eq!(format!("{t1:.4}"), "1.9600");
    }

    #[test]
    fn zero_diff_is_never_significant() {
        let t = z_test(0.0, 0.04, 27, 0.05).unwrap();
        assert_eq!(t.z, 0.0);
        assert!(!t.significant);
        assert!((t.ci.low + t.ci.high).abs() < 1e-12);
    }

    #[test]
    fn invalid_variance_rejected() {
        assert!(matches!(z_test(0.1, 0.0, 1, 0.05), Err(Error::NonPositiveVariance(_))));
        assert!(z_test(0.1, -1.0, 1, 0.05).is_err());
    }

    #[test]
    fn rope_truth_table() {
        let rope = Rope::effect_default();
        let cases = [
            (Interval { low: 0.2, high: 0.3 }, RopeVerdict::PracticallySignificant),
            (Interval { low: -0.3, high: -0.2 }, RopeVerdict::PracticallySignificant),
            (Interval { low: -0.04, high: 0.04 }, RopeVerdict::Negligible),
            (Interval { low: -0.02, high: 0.2 }, RopeVerdict::Inconclusive),
            (Interval { low: -0.5, high: 0.5 }, RopeVerdict::Inconclusive),
        ];
        for (ci, expected) in cases {
            assert_eq!(rope_classify(ci, &rope), expected, "ci {ci:?}");
        }
        let narrow = Rope::new(-0.05, 0.05).unwrap();
        assert_eq!(
            rope_classify(Interval { low: -0.04, high: 0.04 }, &narrow),
            RopeVerdict::Negligible
        );
    }

    #[test]
    fn rope_boundary_touch_is_inconclusive() {
        let rope = Rope::effect_default();
        // CI upper endpoint touching the ROPE lower bound
        assert_eq!(
            rope_classify(Interval { low: -0.4, high: -0.1 }, &rope),
            RopeVerdict::Inconclusive
        );
        // CI endpoint on the ROPE edge from inside
        assert_eq!(
            rope_classify(Interval { low: -0.1, high: 0.05 }, &rope),
            RopeVerdict::Inconclusive
        );
    }

    #[test]
    fn comparison_result_bundles_verdicts() {
        let test = z_test(0.25, 0.0004, 27, 0.05).unwrap();
        let cmp = ComparisonResult::from_z_test(&test, &Rope::effect_default());
        assert!(cmp.statistically_significant); // z = 12.5
        assert_eq!(cmp.rope_verdict, RopeVerdict::PracticallySignificant);
    }
}
