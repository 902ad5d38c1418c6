//! Synthetic SDT observers for estimator validation.
//!
//! An [`ObserverSpec`] fixes the full generative model: type 1 behavior from
//! (d', c), and rating behavior from a type 2 observer with sensitivity
//! meta_d whose criterion sits at meta_c = c' * meta_d. [`expected_counts`]
//! evaluates the model's cell masses exactly (the noise-free oracle);
//! [`simulate_counts`] draws finite-trial data, optionally pinning the type
//! 1 counts to their rounded expectations so repeated runs share identical
//! d' estimates.

use serde::{Deserialize, Serialize};

use crate::counts::{RatingCounts, StimulusClass};
use crate::error::{Error, Result};
use crate::math::normal_sf;
use crate::metad::{type2_probs, MetaDParams};
use crate::rng::{multinomial_draw, stream_rng};

/// A generative equal-variance SDT observer with confidence ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverSpec {
    pub d_prime: f64,
    pub c: f64,
    pub meta_d: f64,
    pub t2_criteria_s1: Vec<f64>,
    pub t2_criteria_s2: Vec<f64>,
}

impl ObserverSpec {
    pub fn new(
        d_prime: f64,
        c: f64,
        meta_d: f64,
        t2_criteria_s1: Vec<f64>,
        t2_criteria_s2: Vec<f64>,
    ) -> Result<Self> {
        let spec = ObserverSpec { d_prime, c, meta_d, t2_criteria_s1, t2_criteria_s2 };
        spec.validate()?;
        Ok(spec)
    }

    /// An observer whose confidence uses all type 1 information
    /// (meta_d = d').
    pub fn ideal(
        d_prime: f64,
        c: f64,
        t2_criteria_s1: Vec<f64>,
        t2_criteria_s2: Vec<f64>,
    ) -> Result<Self> {
        ObserverSpec::new(d_prime, c, d_prime, t2_criteria_s1, t2_criteria_s2)
    }

    pub fn h(&self) -> usize {
        self.t2_criteria_s1.len() + 1
    }

    /// The type 2 criterion implied by the c' constraint; falls back to c
    /// itself when d' = 0 leaves c' undefined.
    pub fn meta_c(&self) -> f64 {
        if self.d_prime != 0.0 {
            (self.c / self.d_prime) * self.meta_d
        } else {
            self.c
        }
    }

    pub fn meta_params(&self) -> MetaDParams {
        MetaDParams {
            meta_d: self.meta_d,
            meta_c: self.meta_c(),
            t2_criteria_s1: self.t2_criteria_s1.clone(),
            t2_criteria_s2: self.t2_criteria_s2.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_prime >= 0.0) {
            return Err(Error::InvalidObserver(format!("d' must be >= 0, got {}", self.d_prime)));
        }
        if !(self.meta_d >= 0.0) {
            return Err(Error::InvalidObserver(format!(
                "meta_d must be >= 0, got {}",
                self.meta_d
            )));
        }
        if self.h() < 2 {
            return Err(Error::ScaleTooSmall(self.h()));
        }
        self.meta_params().validate()
    }

    /// P(respond S2 | S2) = 1 - Phi(c - d'/2).
    pub fn hit_rate(&self) -> f64 {
        normal_sf(self.c - 0.5 * self.d_prime)
    }

    /// P(respond S2 | S1) = 1 - Phi(c + d'/2).
    pub fn false_alarm_rate(&self) -> f64 {
        normal_sf(self.c + 0.5 * self.d_prime)
    }

    /// Joint cell probabilities P(response, confidence | stimulus):
    /// type 1 response mass from (d', c), rating split from the type 2
    /// observer conditional on the response.
    pub fn joint_probs(&self) -> Result<RatingCounts> {
        let table = type2_probs(&self.meta_params())?;
        let h = self.h();
        let mut joint = RatingCounts::new(h)?;
        for stim in StimulusClass::BOTH {
            let p_s2 = match stim {
                StimulusClass::S1 => self.false_alarm_rate(),
                StimulusClass::S2 => self.hit_rate(),
            };
            let p_resp = [1.0 - p_s2, p_s2];
            for resp in StimulusClass::BOTH {
                for conf in 1..=h {
                    joint.set(
                        stim,
                        resp,
                        conf,
                        p_resp[resp.index()] * table.get(stim, resp, conf),
                    );
                }
            }
        }
        Ok(joint)
    }
}

/// Options for [`simulate_counts`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub n_trials: u64,
    /// S1 presentations; defaults to a balanced n_trials / 2.
    pub n_s1: Option<u64>,
    /// Pin type 1 counts to rounded expectations instead of sampling them.
    pub deterministic_type1: bool,
    /// Sample rating counts within each (stimulus, response) cell; when
    /// false the rounded expected ratings are used. Only meaningful with
    /// `deterministic_type1`; sampled type 1 counts always carry sampled
    /// ratings.
    pub sample_type2: bool,
    pub seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            n_trials: 10_000,
            n_s1: None,
            deterministic_type1: false,
            sample_type2: true,
            seed: 0,
        }
    }
}

/// Noise-free expected counts at `n_trials` with balanced presentation:
/// each cell is n_stimulus * P(response, confidence | stimulus).
pub fn expected_counts(spec: &ObserverSpec, n_trials: u64) -> Result<RatingCounts> {
    spec.validate()?;
    let n_s1 = n_trials / 2;
    let n_s2 = n_trials - n_s1;
    expected_counts_split(spec, n_s1, n_s2)
}

pub fn expected_counts_split(spec: &ObserverSpec, n_s1: u64, n_s2: u64) -> Result<RatingCounts> {
    let joint = spec.joint_probs()?;
    let n = [n_s1 as f64, n_s2 as f64];
    RatingCounts::from_fn(spec.h(), |stim, resp, conf| {
        n[stim.index()] * joint.get(stim, resp, conf)
    })
}

/// Draw a finite-trial rating table from the observer. Fixed seed, fixed
/// output.
pub fn simulate_counts(spec: &ObserverSpec, opts: &SimOptions) -> Result<RatingCounts> {
    spec.validate()?;
    if opts.n_trials < 2 {
        return Err(Error::InvalidSimOptions(format!(
            "need at least 2 trials, got {}",
            opts.n_trials
        )));
    }
    let n_s1 = opts.n_s1.unwrap_or(opts.n_trials / 2);
    if n_s1 > opts.n_trials {
        return Err(Error::InvalidSimOptions(format!(
            "n_s1 = {n_s1} exceeds n_trials = {}",
            opts.n_trials
        )));
    }
    let n_s2 = opts.n_trials - n_s1;
    if n_s1 == 0 || n_s2 == 0 {
        return Err(Error::InvalidSimOptions("each stimulus class needs >= 1 trial".into()));
    }

    let h = spec.h();
    let table = type2_probs(&spec.meta_params())?;
    let mut rng = stream_rng(opts.seed, 0);
    let mut counts = RatingCounts::new(h)?;

    for (stim, n_stim) in [(StimulusClass::S1, n_s1), (StimulusClass::S2, n_s2)] {
        let p_s2 = match stim {
            StimulusClass::S1 => spec.false_alarm_rate(),
            StimulusClass::S2 => spec.hit_rate(),
        };
        if opts.deterministic_type1 {
            let resp_counts =
                round_with_sum_repair(&[(1.0 - p_s2) * n_stim as f64, p_s2 * n_stim as f64], n_stim);
            for (resp, n_resp) in StimulusClass::BOTH.into_iter().zip(resp_counts) {
                let cond: Vec<f64> = (1..=h).map(|c| table.get(stim, resp, c)).collect();
                let ratings = if opts.sample_type2 {
                    multinomial_draw(&mut rng, n_resp, &cond)
                } else {
                    round_with_sum_repair(
                        &cond.iter().map(|p| p * n_resp as f64).collect::<Vec<_>>(),
                        n_resp,
                    )
                };
                for (conf, n) in ratings.into_iter().enumerate() {
                    counts.set(stim, resp, conf + 1, n as f64);
                }
            }
        } else {
            // joint draw over all 2h (response, confidence) cells
            let mut probs = Vec::with_capacity(2 * h);
            for resp in StimulusClass::BOTH {
                let p_resp = if resp == StimulusClass::S2 { p_s2 } else { 1.0 - p_s2 };
                for conf in 1..=h {
                    probs.push(p_resp * table.get(stim, resp, conf));
                }
            }
            let draw = multinomial_draw(&mut rng, n_stim, &probs);
            for (k, n) in draw.into_iter().enumerate() {
                let resp = if k < h { StimulusClass::S1 } else { StimulusClass::S2 };
                counts.set(stim, resp, k % h + 1, n as f64);
            }
        }
    }
    Ok(counts)
}

/// Round each weight half-away-from-zero, then repair any drift against
/// `total` on the largest cells so the sum is preserved exactly.
pub(crate) fn round_with_sum_repair(weights: &[f64], total: u64) -> Vec<u64> {
    let mut rounded: Vec<u64> = weights.iter().map(|w| w.max(0.0).round() as u64).collect();
    let mut sum: u64 = rounded.iter().sum();

    while sum != total {
        // index of the largest rounded cell (first on ties) that can absorb
        // the adjustment
        let idx = if sum < total {
            (0..rounded.len()).max_by(|&a, &b| rounded[a].cmp(&rounded[b])).unwrap()
        } else {
            match (0..rounded.len())
                .filter(|&i| rounded[i] > 0)
                .max_by(|&a, &b| rounded[a].cmp(&rounded[b]))
            {
                Some(i) => i,
                None => break,
            }
        };
        if sum < total {
            let add = total - sum;
            rounded[idx] += add;
            sum += add;
        } else {
            let sub = (sum - total).min(rounded[idx]);
            rounded[idx] -= sub;
            sum -= sub;
        }
    }
    rounded
}
