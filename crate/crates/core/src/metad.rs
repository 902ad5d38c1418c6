//! Constrained maximum-likelihood estimation of meta-d'.
//!
//! Meta-d' is the type 1 sensitivity an ideal observer would need in order
//! to produce the observed confidence-rating data. The model places unit
//! normals at -meta_d/2 (S1) and +meta_d/2 (S2) on a latent evidence axis,
//! splits it at the type 1 boundary meta_c and at h-1 confidence thresholds
//! on each side, and scores the observed (stimulus, response, confidence)
//! counts against the rating probabilities *conditional on the response*.
//! Two constraints tie the fit to the type 1 data: meta_c / meta_d equals
//! the empirical c' = c / d', and the full threshold vector is strictly
//! increasing. The fit only ever moves type 2 parameters — type 1 behavior
//! is taken as given.
//!
//! The search runs over an unconstrained reparameterization: thresholds are
//! encoded as log-gaps accumulated outward from meta_c, so ordering holds by
//! construction, and meta_c itself is eliminated through the c' constraint.

use serde::{Deserialize, Serialize};

use crate::counts::{RatingCounts, StimulusClass};
use crate::error::{Error, Result};
use crate::math::{normal_cdf, normal_sf, z};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::sdt::{corrected_rate, c_prime, criterion_c, d_prime, EdgeCorrectionPolicy};

/// Parameters of the type 2 observer model.
///
/// `t2_criteria_s1` are the confidence thresholds for "S1" responses
/// (ascending, all below `meta_c`); `t2_criteria_s2` the thresholds for
/// "S2" responses (ascending, all above `meta_c`). Confidence grows away
/// from `meta_c` on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDParams {
    pub meta_d: f64,
    pub meta_c: f64,
    pub t2_criteria_s1: Vec<f64>,
    pub t2_criteria_s2: Vec<f64>,
}

impl MetaDParams {
    pub fn h(&self) -> usize {
        self.t2_criteria_s1.len() + 1
    }

    /// The 2h-1 finite thresholds in ascending order:
    /// `[t2_s1..., meta_c, t2_s2...]`.
    pub fn thresholds(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(2 * self.h() - 1);
        t.extend_from_slice(&self.t2_criteria_s1);
        t.push(self.meta_c);
        t.extend_from_slice(&self.t2_criteria_s2);
        t
    }

    pub fn validate(&self) -> Result<()> {
        if self.t2_criteria_s1.len() != self.t2_criteria_s2.len() {
            return Err(Error::CriteriaOrdering(format!(
                "sides have different lengths: {} vs {}",
                self.t2_criteria_s1.len(),
                self.t2_criteria_s2.len()
            )));
        }
        if self.h() < 2 {
            return Err(Error::ScaleTooSmall(self.h()));
        }
        if !self.meta_d.is_finite() || !self.meta_c.is_finite() {
            return Err(Error::CriteriaOrdering("non-finite parameters".into()));
        }
        let t = self.thresholds();
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::CriteriaOrdering("non-finite threshold".into()));
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::CriteriaOrdering(format!("{t:?}")));
        }
        Ok(())
    }
}

/// Rating probabilities conditional on (stimulus, response); each
/// conditional slice sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Type2ProbTable {
    h: usize,
    p: Vec<f64>,
}

impl Type2ProbTable {
    pub fn h(&self) -> usize {
        self.h
    }

    #[inline]
    pub fn get(&self, stim: StimulusClass, resp: StimulusClass, conf: usize) -> f64 {
        assert!(conf >= 1 && conf <= self.h);
        self.p[(stim.index() * 2 + resp.index()) * self.h + conf - 1]
    }
}

#[inline]
fn mu(meta_d: f64, stim: StimulusClass) -> f64 {
    match stim {
        StimulusClass::S1 => -0.5 * meta_d,
        StimulusClass::S2 => 0.5 * meta_d,
    }
}

/// Normal mass of the interval (a, b) centered on `mu`, computed from the
/// nearer tail so narrow extreme intervals keep relative accuracy.
#[inline]
fn interval_mass(a: f64, b: f64, mu: f64) -> f64 {
    let (lo, hi) = (a - mu, b - mu);
    let m = if lo >= 0.0 {
        normal_sf(lo) - normal_sf(hi)
    } else if hi <= 0.0 {
        normal_cdf(hi) - normal_cdf(lo)
    } else {
        1.0 - normal_cdf(lo) - normal_sf(hi)
    };
    m.max(0.0)
}

/// Rating probabilities conditional on (stimulus, response) under `params`.
///
/// With the full ordered threshold vector -inf < t_1 < ... < t_{2h-1} < +inf
/// (t_h = meta_c), the joint mass of (response, confidence) is the normal
/// mass between adjacent thresholds; confidence h is outermost on both
/// sides. Conditionals divide by the response mass.
pub fn type2_probs(params: &MetaDParams) -> Result<Type2ProbTable> {
    params.validate()?;
    let h = params.h();
    let t = params.thresholds(); // finite thresholds, t[h-1] = meta_c
    let mut p = vec![0.0; 4 * h];

    for stim in StimulusClass::BOTH {
        let m = mu(params.meta_d, stim);
        let mass_s1 = normal_cdf(params.meta_c - m);
        let mass_s2 = normal_sf(params.meta_c - m);
        for conf in 1..=h {
            // response S1: interval (t_{h-conf-1}, t_{h-conf}) in 0-based
            // finite indices, with -inf below index 0
            let hi = t[h - conf];
            let lo = if h - conf == 0 { f64::NEG_INFINITY } else { t[h - conf - 1] };
            let joint_s1 = interval_mass(lo, hi, m);

            // response S2: interval (t_{h+conf-2}, t_{h+conf-1}), +inf above
            let lo2 = t[h + conf - 2];
            let hi2 = if h + conf - 1 == 2 * h - 1 { f64::INFINITY } else { t[h + conf - 1] };
            let joint_s2 = interval_mass(lo2, hi2, m);

            let base = (stim.index() * 2) * h;
            p[base + conf - 1] = if mass_s1 > 0.0 { joint_s1 / mass_s1 } else { 0.0 };
            p[base + h + conf - 1] = if mass_s2 > 0.0 { joint_s2 / mass_s2 } else { 0.0 };
        }
    }
    Ok(Type2ProbTable { h, p })
}

/// Type 2 log-likelihood of `params` for the observed counts:
/// sum over cells of n(stim, resp, conf) * ln P(conf | stim, resp).
pub fn log_likelihood(counts: &RatingCounts, params: &MetaDParams) -> Result<f64> {
    if counts.h() != params.h() {
        return Err(Error::InvalidCounts(format!(
            "scale mismatch: counts h = {}, params h = {}",
            counts.h(),
            params.h()
        )));
    }
    let table = type2_probs(params)?;
    let mut ll = 0.0;
    for stim in StimulusClass::BOTH {
        for resp in StimulusClass::BOTH {
            for conf in 1..=counts.h() {
                let n = counts.get(stim, resp, conf);
                if n > 0.0 {
                    ll += n * table.get(stim, resp, conf).max(MIN_PROB).ln();
                }
            }
        }
    }
    Ok(ll)
}

const MIN_PROB: f64 = 1e-300;

/// Zero rating cells make the multinomial log-likelihood unbounded; the
/// standard remedy adds 1/(2h) to every rating cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellPaddingPolicy {
    Never,
    /// Pad all cells when any cell is zero (the default).
    #[default]
    WhenDegenerate,
    Always,
}

fn apply_padding(counts: &RatingCounts, policy: CellPaddingPolicy) -> RatingCounts {
    let pad = match policy {
        CellPaddingPolicy::Never => false,
        CellPaddingPolicy::WhenDegenerate => counts.cells().contains(&0.0),
        CellPaddingPolicy::Always => true,
    };
    if !pad {
        return counts.clone();
    }
    let h = counts.h();
    let delta = 1.0 / (2.0 * h as f64);
    RatingCounts::from_fn(h, |s, r, c| counts.get(s, r, c) + delta).expect("same h")
}

/// Options for [`fit_meta_d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub edge_correction: EdgeCorrectionPolicy,
    pub cell_padding: CellPaddingPolicy,
    /// Evaluation budget across both simplex passes.
    pub max_evals: usize,
    /// Relative log-likelihood convergence tolerance.
    pub rel_tol: f64,
    /// Clamp meta_d to a fixed value and fit only the type 2 criteria.
    /// Used for profile-likelihood checks; `None` for a normal fit.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fixed_meta_d: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            edge_correction: EdgeCorrectionPolicy::default(),
            cell_padding: CellPaddingPolicy::default(),
            max_evals: 100_000,
            rel_tol: 1e-8,
            fixed_meta_d: None,
        }
    }
}

/// A fitted meta-d' model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: MetaDParams,
    pub log_likelihood: f64,
    pub m_ratio: f64,
    pub d_prime_type1: f64,
    pub c_type1: f64,
    pub converged: bool,
    /// Objective evaluations spent.
    pub iterations: u64,
}

/// Metacognitive efficiency meta-d' / d'; requires d' > 0. A value of 1
/// marks an observer whose confidence uses all type 1 information.
pub fn m_ratio(meta_d: f64, d_prime: f64) -> Result<f64> {
    if !(d_prime > 0.0) {
        return Err(Error::NonPositiveDPrime(d_prime));
    }
    Ok(meta_d / d_prime)
}

struct Reparam {
    h: usize,
    c_prime_t1: f64,
    fixed_meta_d: Option<f64>,
}

impl Reparam {
    fn dim(&self) -> usize {
        2 * (self.h - 1) + usize::from(self.fixed_meta_d.is_none())
    }

    fn decode(&self, x: &[f64]) -> MetaDParams {
        let (meta_d, gaps) = match self.fixed_meta_d {
            Some(md) => (md, x),
            None => (x[0], &x[1..]),
        };
        let meta_c = self.c_prime_t1 * meta_d;
        let k = self.h - 1;
        let mut s1 = vec![0.0; k];
        let mut t = meta_c;
        for i in 0..k {
            t -= gap(gaps[i]);
            s1[k - 1 - i] = t;
        }
        let mut s2 = vec![0.0; k];
        let mut t = meta_c;
        for i in 0..k {
            t += gap(gaps[k + i]);
            s2[i] = t;
        }
        MetaDParams { meta_d, meta_c, t2_criteria_s1: s1, t2_criteria_s2: s2 }
    }

    fn encode(&self, params: &MetaDParams) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        if self.fixed_meta_d.is_none() {
            x.push(params.meta_d);
        }
        let k = self.h - 1;
        let mut prev = params.meta_c;
        for i in (0..k).rev() {
            let g = (prev - params.t2_criteria_s1[i]).max(MIN_GAP);
            x.push(g.ln());
            prev = params.t2_criteria_s1[i];
        }
        let mut prev = params.meta_c;
        for i in 0..k {
            let g = (params.t2_criteria_s2[i] - prev).max(MIN_GAP);
            x.push(g.ln());
            prev = params.t2_criteria_s2[i];
        }
        x
    }
}

const MIN_GAP: f64 = 1e-6;

#[inline]
fn gap(log_gap: f64) -> f64 {
    log_gap.clamp(-30.0, 30.0).exp()
}

/// Initial thresholds by quantile-matching the pooled rating marginals:
/// treat the 2h cells (response S1 confidence h..1, then response S2
/// confidence 1..h) as interval masses of a standard normal, take quantiles
/// at the cumulative splits, then shift so the middle threshold sits at
/// meta_c and jitter any collapsed gaps back to strict ordering.
fn initial_params(counts: &RatingCounts, meta_d0: f64, meta_c0: f64) -> MetaDParams {
    let h = counts.h();
    let total = counts.n_total().max(1.0);
    let mut cells = Vec::with_capacity(2 * h);
    for conf in (1..=h).rev() {
        cells.push(
            counts.get(StimulusClass::S1, StimulusClass::S1, conf)
                + counts.get(StimulusClass::S2, StimulusClass::S1, conf),
        );
    }
    for conf in 1..=h {
        cells.push(
            counts.get(StimulusClass::S1, StimulusClass::S2, conf)
                + counts.get(StimulusClass::S2, StimulusClass::S2, conf),
        );
    }

    let mut thresholds = Vec::with_capacity(2 * h - 1);
    let mut cum = 0.0;
    for cell in cells.iter().take(2 * h - 1) {
        cum += cell / total;
        let p = cum.clamp(1e-6, 1.0 - 1e-6);
        thresholds.push(z(p).expect("clamped into domain"));
    }

    // center on the constrained criterion and restore strict ordering
    let shift = meta_c0 - thresholds[h - 1];
    for t in thresholds.iter_mut() {
        *t += shift;
    }
    for i in (0..h - 1).rev() {
        if thresholds[i] >= thresholds[i + 1] - MIN_SPACING {
            thresholds[i] = thresholds[i + 1] - MIN_SPACING;
        }
    }
    for i in h..2 * h - 1 {
        if thresholds[i] <= thresholds[i - 1] + MIN_SPACING {
            thresholds[i] = thresholds[i - 1] + MIN_SPACING;
        }
    }

    MetaDParams {
        meta_d: meta_d0,
        meta_c: meta_c0,
        t2_criteria_s1: thresholds[..h - 1].to_vec(),
        t2_criteria_s2: thresholds[h..].to_vec(),
    }
}

const MIN_SPACING: f64 = 0.02;

/// Fit meta-d' to rating counts by constrained maximum likelihood.
///
/// The type 1 statistics (d', c, c') are computed from the raw marginals
/// under `opts.edge_correction` and held fixed; the optimizer moves meta_d
/// and the type 2 criteria with meta_c tied to c' * meta_d. A fit that
/// exhausts its budget comes back with `converged = false` rather than an
/// error.
pub fn fit_meta_d(counts: &RatingCounts, opts: &FitOptions) -> Result<FitResult> {
    counts.validate()?;
    let h = counts.h();

    let sums = counts.type1_sums();
    let (n_s1, n_s2) = (sums[0] + sums[1], sums[2] + sums[3]);
    if n_s1 < 1.0 {
        return Err(Error::EmptyStimulusClass(StimulusClass::S1));
    }
    if n_s2 < 1.0 {
        return Err(Error::EmptyStimulusClass(StimulusClass::S2));
    }

    let hr = corrected_rate(sums[3], n_s2, opts.edge_correction)
        .ok_or(Error::EmptyStimulusClass(StimulusClass::S2))?;
    let far = corrected_rate(sums[1], n_s1, opts.edge_correction)
        .ok_or(Error::EmptyStimulusClass(StimulusClass::S1))?;
    let d_t1 = d_prime(hr, far)?;
    let c_t1 = criterion_c(hr, far)?;
    let c_prime_t1 = c_prime(c_t1, d_t1)?;

    let padded = apply_padding(counts, opts.cell_padding);
    let reparam = Reparam { h, c_prime_t1, fixed_meta_d: opts.fixed_meta_d };

    let meta_d0 = opts.fixed_meta_d.unwrap_or(d_t1);
    let x0 = reparam.encode(&initial_params(&padded, meta_d0, c_prime_t1 * meta_d0));

    let mut objective = |x: &[f64]| -> f64 {
        let params = reparam.decode(x);
        match log_likelihood(&padded, &params) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        }
    };

    // two simplex passes: the restart rebuilds a fresh simplex around the
    // first minimum, which shakes out degenerate simplices cheaply
    let nm = NelderMeadOptions {
        max_evals: opts.max_evals / 2,
        rel_tol: opts.rel_tol,
        init_step: 0.25,
    };
    let first = nelder_mead(&mut objective, &x0, &nm);
    let second = nelder_mead(&mut objective, &first.x, &nm);
    let total_evals = first.evals + second.evals;
    let (best, converged) = if second.value <= first.value {
        let c = second.converged;
        (second, c)
    } else {
        let c = first.converged;
        (first, c)
    };

    let params = reparam.decode(&best.x);
    params.validate()?;
    let ll = -best.value;

    Ok(FitResult {
        m_ratio: params.meta_d / d_t1,
        log_likelihood: ll,
        d_prime_type1: d_t1,
        c_type1: c_t1,
        converged,
        iterations: total_evals,
        params,
    })
}
