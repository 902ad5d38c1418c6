//! Parametric bootstrap confidence intervals for fitted statistics.
//!
//! The resampling model is the one the fit itself implies: type 1 response
//! masses from the observed (edge-corrected) hit and false-alarm rates,
//! rating splits from the fitted type 2 probabilities. Counts are redrawn
//! per stimulus at the observed trial counts, refit, and the percentile
//! interval of the replicate statistics reported. Each replicate owns a
//! ChaCha stream derived from (seed, index), so parallel and serial runs
//! agree bit for bit.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::counts::{RatingCounts, StimulusClass};
use crate::error::{Error, Result};
use crate::metad::{fit_meta_d, type2_probs, FitOptions, FitResult};
use crate::rng::{multinomial_draw, stream_rng};
use crate::sdt::corrected_rate;

/// Statistic to bootstrap from each refit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootStatistic {
    MetaD,
    MRatio,
    LogMRatio,
    DPrime,
}

impl BootStatistic {
    pub fn name(&self) -> &'static str {
        match self {
            BootStatistic::MetaD => "meta_d",
            BootStatistic::MRatio => "m_ratio",
            BootStatistic::LogMRatio => "log_m_ratio",
            BootStatistic::DPrime => "d_prime",
        }
    }

    pub fn parse(name: &str) -> Option<BootStatistic> {
        match name {
            "meta_d" => Some(BootStatistic::MetaD),
            "m_ratio" => Some(BootStatistic::MRatio),
            "log_m_ratio" => Some(BootStatistic::LogMRatio),
            "d_prime" => Some(BootStatistic::DPrime),
            _ => None,
        }
    }

    fn eval(&self, fit: &FitResult) -> f64 {
        match self {
            BootStatistic::MetaD => fit.params.meta_d,
            BootStatistic::MRatio => fit.m_ratio,
            BootStatistic::LogMRatio => fit.m_ratio.ln(),
            BootStatistic::DPrime => fit.d_prime_type1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub n_boot: usize,
    /// Interval level, e.g. 0.95.
    pub level: f64,
    pub seed: u64,
    pub fit: FitOptions,
    /// Diagnostic mode: inject no resampling variation at all — every
    /// replicate refits the original counts, so the interval collapses onto
    /// the point estimate exactly.
    pub deterministic: bool,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            n_boot: 1000,
            level: 0.95,
            seed: 0,
            fit: FitOptions::default(),
            deterministic: false,
        }
    }
}

/// A percentile bootstrap interval plus replicate accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub statistic: String,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub n_boot: usize,
    pub seed: u64,
    /// Statistic at the original fit.
    pub point: f64,
    /// Standard deviation of the replicate statistics.
    pub se: f64,
    /// Replicates dropped because their refit failed.
    pub n_failed: usize,
}

/// Per-stimulus joint cell probabilities of the fitted model, and the
/// per-stimulus totals to redraw at.
struct ResampleModel {
    h: usize,
    probs: [Vec<f64>; 2],
    totals: [u64; 2],
}

impl ResampleModel {
    fn build(counts: &RatingCounts, fit: &FitResult, opts: &FitOptions) -> Result<ResampleModel> {
        let h = counts.h();
        let sums = counts.type1_sums();
        let (n_s1, n_s2) = (sums[0] + sums[1], sums[2] + sums[3]);
        let far = corrected_rate(sums[1], n_s1, opts.edge_correction)
            .ok_or(Error::EmptyStimulusClass(StimulusClass::S1))?;
        let hr = corrected_rate(sums[3], n_s2, opts.edge_correction)
            .ok_or(Error::EmptyStimulusClass(StimulusClass::S2))?;
        let table = type2_probs(&fit.params)?;

        let mut probs: [Vec<f64>; 2] = [Vec::with_capacity(2 * h), Vec::with_capacity(2 * h)];
        for stim in StimulusClass::BOTH {
            let p_s2 = if stim == StimulusClass::S2 { hr } else { far };
            for resp in StimulusClass::BOTH {
                let p_resp = if resp == StimulusClass::S2 { p_s2 } else { 1.0 - p_s2 };
                for conf in 1..=h {
                    probs[stim.index()].push(p_resp * table.get(stim, resp, conf));
                }
            }
        }
        Ok(ResampleModel { h, probs, totals: [n_s1.round() as u64, n_s2.round() as u64] })
    }

    fn draw(&self, seed: u64, replicate: u64) -> RatingCounts {
        let mut rng = stream_rng(seed, replicate + 1);
        let draws: Vec<Vec<u64>> = (0..2)
            .map(|s| multinomial_draw(&mut rng, self.totals[s], &self.probs[s]))
            .collect();
        self.counts_from(|stim_idx, cell| draws[stim_idx][cell] as f64)
    }

    fn counts_from(&self, f: impl Fn(usize, usize) -> f64) -> RatingCounts {
        RatingCounts::from_fn(self.h, |stim, resp, conf| {
            f(stim.index(), resp.index() * self.h + conf - 1)
        })
        .expect("valid h")
    }
}

/// Percentile bootstrap CI for one statistic of one counts table.
pub fn bootstrap_ci(
    counts: &RatingCounts,
    statistic: BootStatistic,
    opts: &BootstrapOptions,
) -> Result<BootstrapCi> {
    check_opts(opts)?;
    let point_fit = fit_meta_d(counts, &opts.fit)?;
    let point = statistic.eval(&point_fit);
    let model = ResampleModel::build(counts, &point_fit, &opts.fit)?;

    let replicates = run_replicates(opts, |r| {
        let resampled = if opts.deterministic { counts.clone() } else { model.draw(opts.seed, r) };
        fit_meta_d(&resampled, &opts.fit).ok().map(|fit| statistic.eval(&fit))
    });
    finish(statistic.name(), point, replicates, opts)
}

/// Percentile bootstrap CI for the difference of one statistic between two
/// independent counts tables (a - b).
pub fn bootstrap_diff_ci(
    a: &RatingCounts,
    b: &RatingCounts,
    statistic: BootStatistic,
    opts: &BootstrapOptions,
) -> Result<BootstrapCi> {
    check_opts(opts)?;
    let fit_a = fit_meta_d(a, &opts.fit)?;
    let fit_b = fit_meta_d(b, &opts.fit)?;
    let point = statistic.eval(&fit_a) - statistic.eval(&fit_b);
    let model_a = ResampleModel::build(a, &fit_a, &opts.fit)?;
    let model_b = ResampleModel::build(b, &fit_b, &opts.fit)?;

    // each side draws from its own stream half so the pair stays independent
    let replicates = run_replicates(opts, |r| {
        let (ca, cb) = if opts.deterministic {
            (a.clone(), b.clone())
        } else {
            (model_a.draw(opts.seed, 2 * r), model_b.draw(opts.seed, 2 * r + 1))
        };
        match (fit_meta_d(&ca, &opts.fit), fit_meta_d(&cb, &opts.fit)) {
            (Ok(fa), Ok(fb)) => Some(statistic.eval(&fa) - statistic.eval(&fb)),
            _ => None,
        }
    });
    finish(&format!("diff_{}", statistic.name()), point, replicates, opts)
}

fn check_opts(opts: &BootstrapOptions) -> Result<()> {
    if opts.n_boot < 100 {
        return Err(Error::Bootstrap(format!("n_boot must be >= 100, got {}", opts.n_boot)));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::ProbabilityDomain(opts.level));
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn run_replicates(
    opts: &BootstrapOptions,
    one: impl Fn(u64) -> Option<f64> + Send + Sync,
) -> Vec<Option<f64>> {
    (0..opts.n_boot as u64).into_par_iter().map(one).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_replicates(
    opts: &BootstrapOptions,
    one: impl Fn(u64) -> Option<f64> + Send + Sync,
) -> Vec<Option<f64>> {
    (0..opts.n_boot as u64).map(one).collect()
}

fn finish(
    name: &str,
    point: f64,
    replicates: Vec<Option<f64>>,
    opts: &BootstrapOptions,
) -> Result<BootstrapCi> {
    let mut values: Vec<f64> = replicates.iter().filter_map(|v| *v).collect();
    let n_failed = replicates.len() - values.len();
    if n_failed * 5 > replicates.len() {
        return Err(Error::Bootstrap(format!(
            "{n_failed} of {} replicates failed to refit (> 20%)",
            replicates.len()
        )));
    }
    values.sort_by(f64::total_cmp);
    let alpha = 1.0 - opts.level;
    let low = percentile(&values, alpha / 2.0);
    let high = percentile(&values, 1.0 - alpha / 2.0);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let se = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (values.len() - 1).max(1) as f64)
        .sqrt();
    Ok(BootstrapCi {
        statistic: name.to_string(),
        low,
        high,
        level: opts.level,
        n_boot: opts.n_boot,
        seed: opts.seed,
        point,
        se,
        n_failed,
    })
}

/// Linear-interpolation percentile of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{expected_counts, simulate_counts, ObserverSpec, SimOptions};

    fn small_opts(seed: u64) -> BootstrapOptions {
        BootstrapOptions { n_boot: 100, seed, ..Default::default() }
    }

    #[test]
    fn deterministic_mode_collapses_to_point() {
        let spec = ObserverSpec::ideal(
            2.0,
            0.0,
            vec![-1.5, -1.0, -0.6, -0.3],
            vec![0.3, 0.6, 1.0, 1.5],
        )
        .unwrap();
        let counts = expected_counts(&spec, 4000).unwrap();
        let opts = BootstrapOptions { deterministic: true, ..small_opts(3) };
        let ci = bootstrap_ci(&counts, BootStatistic::MetaD, &opts).unwrap();
        assert_eq!(ci.low, ci.high);
        assert_eq!(ci.low, ci.point);
    }

    #[test]
    fn ideal_observer_log_m_ratio_interval_straddles_zero() {
        let spec = ObserverSpec::ideal(
            2.0,
            0.0,
            vec![-1.5, -1.0, -0.6, -0.3],
            vec![0.3, 0.6, 1.0, 1.5],
        )
        .unwrap();
        let counts = simulate_counts(
            &spec,
            &SimOptions { n_trials: 10_000, seed: 21, ..Default::default() },
        )
        .unwrap();
        let ci = bootstrap_ci(&counts, BootStatistic::LogMRatio, &small_opts(4)).unwrap();
        assert!(ci.low < 0.0 && ci.high > 0.0, "interval [{}, {}]", ci.low, ci.high);
    }

    #[test]
    fn fixed_seed_reproduces_interval() {
        let spec = ObserverSpec::new(
            2.0,
            0.1,
            1.4,
            vec![-1.2, -0.8, -0.5, -0.2],
            vec![0.4, 0.7, 1.0, 1.4],
        )
        .unwrap();
        let counts = simulate_counts(
            &spec,
            &SimOptions { n_trials: 3000, seed: 5, ..Default::default() },
        )
        .unwrap();
        let a = bootstrap_ci(&counts, BootStatistic::MetaD, &small_opts(9)).unwrap();
        let b = bootstrap_ci(&counts, BootStatistic::MetaD, &small_opts(9)).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci(&counts, BootStatistic::MetaD, &small_opts(10)).unwrap();
        assert!(a.low != c.low || a.high != c.high);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn parallel_and_serial_replicates_agree_bit_for_bit() {
        // frozen from a run of this exact configuration; the same numbers
        // must come out whether replicates run under rayon (default) or
        // serially (--no-default-features), because each replicate owns a
        // stream derived from (seed, index)
        let spec = ObserverSpec::new(
            1.8,
            0.1,
            1.3,
            vec![-1.1, -0.75, -0.45, -0.2],
            vec![0.35, 0.6, 0.9, 1.3],
        )
        .unwrap();
        let counts = simulate_counts(
            &spec,
            &SimOptions { n_trials: 2000, seed: 31, ..Default::default() },
        )
        .unwrap();
        let ci = bootstrap_ci(
            &counts,
            BootStatistic::MetaD,
            &BootstrapOptions { n_boot: 100, level: 0.9, seed: 77, ..Default::default() },
        )
        .unwrap();
        assert_eq!(ci.low, 1.14497827347322878);
        assert_eq!(ci.high, 1.46386034100030948);
        assert_eq!(ci.point, 1.33167788968576373);
    }

    #[test]
    fn n_boot_floor_enforced() {
        let spec = ObserverSpec::ideal(1.5, 0.0, vec![-0.8], vec![0.8]).unwrap();
        let counts = expected_counts(&spec, 1000).unwrap();
        let opts = BootstrapOptions { n_boot: 50, ..Default::default() };
        assert!(bootstrap_ci(&counts, BootStatistic::MetaD, &opts).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert!((percentile(&v, 0.25) - 2.0).abs() < 1e-12);
        assert!((percentile(&v, 0.1) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn diff_of_identical_models_straddles_zero() {
        let spec = ObserverSpec::new(
            1.8,
            0.0,
            1.3,
            vec![-1.0, -0.7, -0.45, -0.2],
            vec![0.2, 0.45, 0.7, 1.0],
        )
        .unwrap();
        let a = simulate_counts(&spec, &SimOptions { n_trials: 4000, seed: 1, ..Default::default() })
            .unwrap();
        let b = simulate_counts(&spec, &SimOptions { n_trials: 4000, seed: 2, ..Default::default() })
            .unwrap();
        let ci = bootstrap_diff_ci(&a, &b, BootStatistic::MetaD, &small_opts(7)).unwrap();
        assert!(ci.low < 0.0 && ci.high > 0.0, "interval [{}, {}]", ci.low, ci.high);
        assert_eq!(ci.statistic, "diff_meta_d");
    }
}
