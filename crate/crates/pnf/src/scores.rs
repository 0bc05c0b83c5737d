//! Quality scores, privacy parameters, and the coin probabilities that drive
//! every mechanism in this crate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A non-empty vector of finite quality scores, one per candidate.
///
/// Indices are 0-based throughout the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    values: Vec<f64>,
}

impl QualityScores {
    /// Validates that the input is non-empty and every entry is finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "scores must contain at least one candidate".into(),
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "score at index {i} is not finite ({v})"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty inputs
    }

    /// Largest score q_*.
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of candidates attaining the maximum.
    pub fn max_count(&self) -> usize {
        let m = self.max();
        self.values.iter().filter(|&&v| v == m).count()
    }

    /// Gap q_* − q_r of each candidate to the maximum (all entries ≥ 0).
    pub fn gaps(&self) -> Vec<f64> {
        let m = self.max();
        self.values.iter().map(|v| m - v).collect()
    }

    /// Scores with the maximum shifted to zero (q − q_*·1).
    ///
    /// Every downstream quantity is invariant under a common shift, so this
    /// is purely a normalization convenience.
    pub fn normalized(&self) -> QualityScores {
        let m = self.max();
        QualityScores {
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    /// Uniform random scores on [lo, hi] with one candidate pinned at hi so
    /// the maximizer is unique. Used by verification sweeps and tests.
    pub fn random_uniform<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one candidate".into()));
        }
        let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
        let top = rng.gen_range(0..n);
        values[top] = hi;
        QualityScores::new(values)
    }
}

/// Privacy budget ε and the sensitivity Δ of the score function.
///
/// With `monotonic` set, the score function is promised to be monotonic in
/// the underlying dataset, and the coin exponent doubles from ε/(2Δ) to ε/Δ
/// while retaining ε-differential privacy (the worst-case neighbor then
/// moves a single score by Δ rather than 2Δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta_sensitivity: f64,
    monotonic: bool,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta_sensitivity: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon ({epsilon}) must be positive and finite"
            )));
        }
        if !(delta_sensitivity.is_finite() && delta_sensitivity > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sensitivity ({delta_sensitivity}) must be positive and finite"
            )));
        }
        Ok(Self {
            epsilon,
            delta_sensitivity,
            monotonic: false,
        })
    }

    pub fn with_monotonic(mut self, monotonic: bool) -> Self {
        self.monotonic = monotonic;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.delta_sensitivity
    }

    pub fn monotonic(&self) -> bool {
        self.monotonic
    }

    /// Exponent scale applied to score gaps: ε/(2Δ), or ε/Δ when the score
    /// function is monotonic.
    pub fn scale(&self) -> f64 {
        if self.monotonic {
            self.epsilon / self.delta_sensitivity
        } else {
            self.epsilon / (2.0 * self.delta_sensitivity)
        }
    }

    /// Same parameters with a different ε (used by sweeps and bisection).
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Ok(PrivacyParams::new(epsilon, self.delta_sensitivity)?.with_monotonic(self.monotonic))
    }
}

/// Per-candidate Bernoulli parameters p_r = exp(scale · (q_r − q_*)).
///
/// Maximal candidates have p_r = 1 exactly; entries for very distant scores
/// may underflow to +0.0 (gap · scale beyond ≈ 745), which simply means the
/// candidate is never selected. All entries lie in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinProbabilities {
    probs: Vec<f64>,
}

impl CoinProbabilities {
    pub fn values(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sum of all coin probabilities (≥ 1 because the maximum contributes 1).
    pub fn total(&self) -> f64 {
        // Summing in ascending order keeps the result invariant under
        // permutations of the input scores.
        let mut sorted = self.probs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("probabilities are finite"));
        sorted.iter().sum()
    }
}

/// Computes the flip probabilities for a score vector.
pub fn coin_probabilities(scores: &QualityScores, params: &PrivacyParams) -> CoinProbabilities {
    let scale = params.scale();
    let q_star = scores.max();
    let probs = scores
        .values()
        .iter()
        .map(|q| (scale * (q - q_star)).exp())
        .collect();
    CoinProbabilities { probs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64) -> PrivacyParams {
        PrivacyParams::new(eps, 1.0).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(
            QualityScores::new(vec![]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(QualityScores::new(vec![0.0, f64::NAN]).is_err());
        assert!(QualityScores::new(vec![f64::INFINITY]).is_err());
        assert!(PrivacyParams::new(0.0, 1.0).is_err());
        assert!(PrivacyParams::new(1.0, -2.0).is_err());
        assert!(PrivacyParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn normalization_examples() {
        let q = QualityScores::new(vec![3.0, 5.0, 5.0]).unwrap();
        assert_eq!(q.normalized().values(), &[-2.0, 0.0, 0.0]);
        assert_eq!(q.max_count(), 2);

        let q = QualityScores::new(vec![-7.0]).unwrap();
        assert_eq!(q.normalized().values(), &[0.0]);

        let q = QualityScores::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(q.normalized().values(), &[0.0, 0.0]);
        assert_eq!(q.gaps(), vec![0.0, 0.0]);
    }

    #[test]
    fn coin_probability_examples() {
        let q = QualityScores::new(vec![-2.0, 0.0]).unwrap();
        let p = coin_probabilities(&q, &params(1.0));
        assert_eq!(p.values()[1], 1.0);
        assert!((p.values()[0] - (-1.0f64).exp()).abs() < 1e-15);

        // Monotonic scores double the exponent.
        let p = coin_probabilities(&q, &params(1.0).with_monotonic(true));
        assert!((p.values()[0] - (-2.0f64).exp()).abs() < 1e-15);

        // All-equal scores get coin 1 everywhere.
        let q = QualityScores::new(vec![4.0, 4.0, 4.0]).unwrap();
        let p = coin_probabilities(&q, &params(2.0));
        assert_eq!(p.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn shift_invariance_is_exact_for_exact_arithmetic() {
        // Dyadic scores and shifts make (q_r + c) − (q_* + c) bit-exact.
        let base = vec![-4.0, -1.5, 0.0, -0.25];
        let q = QualityScores::new(base.clone()).unwrap();
        for c in [1.0, -8.0, 0.5, 1024.0] {
            let shifted =
                QualityScores::new(base.iter().map(|v| v + c).collect()).unwrap();
            for eps in [0.1, 1.0, 5.0] {
                let a = coin_probabilities(&q, &params(eps));
                let b = coin_probabilities(&shifted, &params(eps));
                assert_eq!(a.values(), b.values());
            }
        }
    }

    #[test]
    fn underflow_far_scores_to_zero() {
        let q = QualityScores::new(vec![-1e9, 0.0]).unwrap();
        let p = coin_probabilities(&q, &params(1.0));
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(p.values()[1], 1.0);
    }

    #[test]
    fn max_coin_is_always_one() {
        let q = QualityScores::new(vec![3.0, 7.0, -2.0, 7.0]).unwrap();
        let p = coin_probabilities(&q, &params(0.3));
        assert_eq!(p.values()[1], 1.0);
        assert_eq!(p.values()[3], 1.0);
        assert!(p.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(p.total() >= 1.0);
    }
}
