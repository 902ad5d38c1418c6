//! Deterministic seeding and multinomial sampling helpers.
//!
//! Replicated work (bootstrap replicates, simulation repetitions) derives an
//! independent ChaCha stream per replicate from (seed, index), so serial and
//! parallel execution produce bit-identical draws.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

/// SplitMix64 finalizer over (seed, stream); decorrelates consecutive
/// stream indices.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut x = seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(mix_seed(seed, stream))
}

/// One multinomial draw of `n` trials over `probs` (need not be normalized),
/// by sequential binomial conditioning.
pub(crate) fn multinomial_draw<R: Rng>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut rest: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == probs.len() - 1 {
            out[i] = remaining;
            break;
        }
        let cond = if rest > 0.0 { (p / rest).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if cond <= 0.0 {
            0
        } else if cond >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, cond).expect("conditional probability in [0,1]").sample(rng)
        };
        out[i] = draw;
        remaining -= draw;
        rest -= p;
    }
    out
}
