//! Seeded samplers for the three selection mechanisms.
//!
//! All samplers draw from a caller-supplied ChaCha8 generator. Reproducible
//! multi-draw experiments use [`DrawStreams`]: draw i consumes stream i of
//! the seed, so outputs are independent of draw order and batch size.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scores::{coin_probabilities, PrivacyParams, QualityScores};
use crate::{Error, Result};

/// Iteration cap for the rejection sampler; expected iterations are at most
/// n (the maximal candidate always accepts), so this is never reached for
/// valid inputs.
pub const REJECTION_CAP: u64 = 10_000_000;

/// Default sampling seed used by the command-line interface (0x5EED).
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Stream-splitting rule for reproducible experiments: draw i uses the
/// ChaCha8 stream i of a fixed 64-bit seed.
#[derive(Debug, Clone)]
pub struct DrawStreams {
    seed: u64,
    next: u64,
}

impl DrawStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed, next: 0 }
    }

    /// Generator for the next draw.
    pub fn next_rng(&mut self) -> ChaCha8Rng {
        let rng = stream_rng(self.seed, self.next);
        self.next += 1;
        rng
    }
}

/// Generator for a specific (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Record of the randomness a permute-and-flip or rejection sampler consumed,
/// kept for tests and debugging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleTrace {
    /// Candidates in the order their coins were flipped.
    pub order: Vec<usize>,
    /// Outcome of each flip; the final entry is the accepting head.
    pub flips: Vec<bool>,
}

/// Outcome of one mechanism invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerResult {
    /// Selected candidate (0-based).
    pub index: usize,
    pub trace: Option<SampleTrace>,
}

/// Candidate traversal used by permute-and-flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfOrder {
    /// Shuffle all candidates up front (Fisher–Yates), then flip coins along
    /// the permutation.
    Shuffle,
    /// Draw candidates one at a time without replacement; distributionally
    /// identical to `Shuffle`.
    WithoutReplacement,
}

/// Permute-and-flip with the default up-front shuffle.
pub fn sample_permute_and_flip<R: Rng>(
    scores: &QualityScores,
    params: &PrivacyParams,
    rng: &mut R,
) -> SamplerResult {
    sample_permute_and_flip_with(scores, params, PfOrder::Shuffle, rng)
}

/// Permute-and-flip: visit candidates in uniformly random order and return
/// the first whose Bernoulli(p_r) coin lands heads. The maximal candidate's
/// coin is 1, so the walk always terminates.
pub fn sample_permute_and_flip_with<R: Rng>(
    scores: &QualityScores,
    params: &PrivacyParams,
    order: PfOrder,
    rng: &mut R,
) -> SamplerResult {
    let p = coin_probabilities(scores, params);
    let p = p.values();
    let n = p.len();
    let mut trace = SampleTrace {
        order: Vec::with_capacity(n),
        flips: Vec::with_capacity(n),
    };
    match order {
        PfOrder::Shuffle => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            for r in perm {
                let heads = rng.gen::<f64>() < p[r];
                trace.order.push(r);
                trace.flips.push(heads);
                if heads {
                    return SamplerResult {
                        index: r,
                        trace: Some(trace),
                    };
                }
            }
        }
        PfOrder::WithoutReplacement => {
            let mut remaining: Vec<usize> = (0..n).collect();
            while !remaining.is_empty() {
                let at = rng.gen_range(0..remaining.len());
                let r = remaining.swap_remove(at);
                let heads = rng.gen::<f64>() < p[r];
                trace.order.push(r);
                trace.flips.push(heads);
                if heads {
                    return SamplerResult {
                        index: r,
                        trace: Some(trace),
                    };
                }
            }
        }
    }
    unreachable!("the maximal candidate's coin probability is exactly 1");
}

/// Exponential mechanism by direct inverse-CDF over the normalized coin
/// probabilities.
pub fn sample_exponential<R: Rng>(
    scores: &QualityScores,
    params: &PrivacyParams,
    rng: &mut R,
) -> SamplerResult {
    let p = coin_probabilities(scores, params);
    let total = p.total();
    let p = p.values();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (r, &pr) in p.iter().enumerate() {
        if pr > 0.0 {
            last_positive = r;
        }
        acc += pr;
        if u < acc {
            return SamplerResult {
                index: r,
                trace: None,
            };
        }
    }
    // Rounding residue at the top of the CDF.
    SamplerResult {
        index: last_positive,
        trace: None,
    }
}

/// Exponential mechanism as rejection sampling: propose a uniform candidate,
/// accept with probability p_r, repeat. Same distribution as
/// [`sample_exponential`]; expected iterations n / Σp ≤ n.
pub fn sample_exponential_rejection<R: Rng>(
    scores: &QualityScores,
    params: &PrivacyParams,
    rng: &mut R,
) -> Result<SamplerResult> {
    let p = coin_probabilities(scores, params);
    let p = p.values();
    let n = p.len();
    let mut trace = SampleTrace {
        order: Vec::new(),
        flips: Vec::new(),
    };
    for _ in 0..REJECTION_CAP {
        let r = rng.gen_range(0..n);
        let accept = rng.gen::<f64>() < p[r];
        trace.order.push(r);
        trace.flips.push(accept);
        if accept {
            return Ok(SamplerResult {
                index: r,
                trace: Some(trace),
            });
        }
    }
    Err(Error::SamplerStalled(REJECTION_CAP))
}

/// Report-noisy-max: add independent Laplace(1/scale) noise to every score
/// and return the argmax. Ties (measure zero, but possible in floats) break
/// toward the lowest index. Noise is drawn in index order.
pub fn sample_noisy_max<R: Rng>(
    scores: &QualityScores,
    params: &PrivacyParams,
    rng: &mut R,
) -> SamplerResult {
    let b = 1.0 / params.scale();
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (r, &q) in scores.values().iter().enumerate() {
        let noisy = q + laplace(b, rng);
        if noisy > best_val {
            best = r;
            best_val = noisy;
        }
    }
    SamplerResult {
        index: best,
        trace: None,
    }
}

/// Laplace(0, b) via inverse CDF; u = 0 is redrawn so the result is finite
/// (u ∈ (0, 1) keeps the log argument strictly positive).
pub fn laplace<R: Rng>(b: f64, rng: &mut R) -> f64 {
    let mut u: f64 = rng.gen();
    while u == 0.0 {
        u = rng.gen();
    }
    let v = u - 0.5;
    -b * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}
