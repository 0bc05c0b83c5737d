//! Error metrics, worst-case curves, and verification suites (privacy on a
//! score lattice, regularity, stochastic dominance).
//!
//! The error of a selection M(q) is the nonnegative gap E = q_* − q_{M(q)}.

use rand::Rng;
use serde::Serialize;

use crate::exact::{pmf_exponential, pmf_noisy_max, pmf_pf_dp, QuadratureConfig, SelectionDistribution};
use crate::mechanisms::stream_rng;
use crate::scores::{PrivacyParams, QualityScores};
use crate::{Error, Mechanism, Result};

/// Expected error Σ_r Pr[r] · (q_* − q_r).
pub fn expected_error(dist: &SelectionDistribution, scores: &QualityScores) -> Result<f64> {
    if dist.len() != scores.len() {
        return Err(Error::LengthMismatch(dist.len(), scores.len()));
    }
    Ok(dist
        .probs()
        .iter()
        .zip(scores.gaps())
        .map(|(p, gap)| p * gap)
        .sum())
}

/// Complementary CDF Pr[E ≥ t]; gaps exactly equal to t are included.
pub fn error_ccdf(dist: &SelectionDistribution, scores: &QualityScores, t: f64) -> Result<f64> {
    if dist.len() != scores.len() {
        return Err(Error::LengthMismatch(dist.len(), scores.len()));
    }
    Ok(dist
        .probs()
        .iter()
        .zip(scores.gaps())
        .filter(|(_, gap)| *gap >= t)
        .map(|(p, _)| p)
        .sum())
}

/// Expected error together with the CCDF sampled at every distinct gap.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorProfile {
    pub expected_error: f64,
    /// (t, Pr[E ≥ t]) at each distinct gap, ascending in t.
    pub ccdf: Vec<(f64, f64)>,
}

pub fn error_profile(dist: &SelectionDistribution, scores: &QualityScores) -> Result<ErrorProfile> {
    let mut ts = scores.gaps();
    ts.sort_by(|a, b| a.partial_cmp(b).expect("gaps are finite"));
    ts.dedup();
    let ccdf = ts
        .iter()
        .map(|&t| Ok((t, error_ccdf(dist, scores, t)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorProfile {
        expected_error: expected_error(dist, scores)?,
        ccdf,
    })
}

/// Error-ratio convention used throughout: 0/0 is 1 (both mechanisms are
/// perfect), otherwise the plain quotient.
pub fn error_ratio(numerator: f64, denominator: f64) -> f64 {
    if numerator == 0.0 && denominator == 0.0 {
        1.0
    } else {
        numerator / denominator
    }
}

/// Outcome of a stochastic-dominance check of permute-and-flip against the
/// exponential mechanism on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    /// max over thresholds t of CCDF_pf(t) − CCDF_em(t), clamped at 0.
    pub max_ccdf_violation: f64,
    pub pf_expected_error: f64,
    pub em_expected_error: f64,
    pub em_pf_ratio: f64,
    pub holds: bool,
}

/// Verifies that permute-and-flip stochastically dominates the exponential
/// mechanism: Pr[E_pf ≥ t] ≤ Pr[E_em ≥ t] at every threshold.
pub fn check_dominance(scores: &QualityScores, params: &PrivacyParams) -> Result<DominanceReport> {
    let pf = pmf_pf_dp(scores, params);
    let em = pmf_exponential(scores, params);
    let mut ts = scores.gaps();
    ts.sort_by(|a, b| a.partial_cmp(b).expect("gaps are finite"));
    ts.dedup();
    let mut max_violation = 0.0f64;
    for &t in &ts {
        let diff = error_ccdf(&pf, scores, t)? - error_ccdf(&em, scores, t)?;
        max_violation = max_violation.max(diff);
    }
    let pf_err = expected_error(&pf, scores)?;
    let em_err = expected_error(&em, scores)?;
    Ok(DominanceReport {
        max_ccdf_violation: max_violation,
        pf_expected_error: pf_err,
        em_expected_error: em_err,
        em_pf_ratio: error_ratio(em_err, pf_err),
        holds: max_violation <= 1e-10,
    })
}

/// (np − 1 + (1−p)^n) / (np), evaluated without catastrophic cancellation:
/// binomial series Σ_{j≥2} C(n,j)(−p)^j for np ≤ 1/2, expm1/log1p route
/// otherwise.
fn pf_bracket(p: f64, n: usize) -> f64 {
    let nf = n as f64;
    let np = nf * p;
    if np <= 0.5 {
        let mut term = nf * (nf - 1.0) / 2.0 * p * p; // j = 2
        let mut sum = term;
        let mut j = 2usize;
        while j < n {
            term *= -((nf - j as f64) * p) / (j as f64 + 1.0);
            sum += term;
            j += 1;
            if term.abs() < 1e-22 * sum.abs() {
                break;
            }
        }
        sum / np
    } else {
        (np + (nf * (-p).ln_1p()).exp_m1()) / np
    }
}

/// Expected error of a mechanism on its worst-case instance
/// q = (c, …, c, 0) with n−1 tied low scores, parametrized by the coin value
/// p = exp(scale · c) ∈ (0, 1]:
///
/// - exponential: (ln(1/p)/scale) · (n−1)p / (1 + (n−1)p)
/// - permute-and-flip: (ln(1/p)/scale) · (np − 1 + (1−p)^n)/(np)
///
/// Report-noisy-max has no closed form here; use
/// [`noisy_max_expected_error`].
pub fn worst_case_value(
    mechanism: Mechanism,
    p: f64,
    n: usize,
    params: &PrivacyParams,
) -> Result<f64> {
    if !(p.is_finite() && p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "coin value p ({p}) must lie in (0, 1]"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one candidate".into()));
    }
    let prefactor = -p.ln() / params.scale();
    let bracket = match mechanism {
        Mechanism::Exponential => {
            let m = (n - 1) as f64 * p;
            m / (1.0 + m)
        }
        Mechanism::PermuteAndFlip => pf_bracket(p, n),
        Mechanism::ReportNoisyMax => {
            return Err(Error::InvalidArgument(
                "report-noisy-max has no closed-form worst case; integrate the pmf".into(),
            ))
        }
    };
    Ok(prefactor * bracket)
}

/// Maximizes the worst-case error over p ∈ (0, 1]: a 1024-point log grid
/// locates the basin, then golden-section search refines the bracket to
/// relative width 1e−10. Returns (p*, value*).
pub fn worst_case_maximize(
    mechanism: Mechanism,
    n: usize,
    params: &PrivacyParams,
) -> Result<(f64, f64)> {
    const GRID: usize = 1024;
    let (lo, hi) = (1e-12f64.ln(), 0.0f64);
    let value_at = |t: f64| worst_case_value(mechanism, t.exp(), n, params);
    let mut best = (lo, value_at(lo)?);
    for i in 1..GRID {
        let t = lo + (hi - lo) * i as f64 / (GRID - 1) as f64;
        let v = value_at(t)?;
        if v > best.1 {
            best = (t, v);
        }
    }
    let step = (hi - lo) / (GRID - 1) as f64;
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (value_at(x1)?, value_at(x2)?);
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = value_at(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = value_at(x1)?;
        }
    }
    let t_star = 0.5 * (a + b);
    let p_star = t_star.exp();
    Ok((p_star, value_at(t_star)?))
}

/// Worst-case error as a function of the coin value p, plus its maximizer.
#[derive(Debug, Clone, Serialize)]
pub struct WorstCaseCurve {
    pub mechanism: Mechanism,
    /// (p, worst-case expected error) over the requested grid.
    pub points: Vec<(f64, f64)>,
    /// (p*, value*) from [`worst_case_maximize`].
    pub maximizer: (f64, f64),
}

pub fn worst_case_curve(
    mechanism: Mechanism,
    n: usize,
    params: &PrivacyParams,
    grid: &[f64],
) -> Result<WorstCaseCurve> {
    let points = grid
        .iter()
        .map(|&p| Ok((p, worst_case_value(mechanism, p, n, params)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WorstCaseCurve {
        mechanism,
        points,
        maximizer: worst_case_maximize(mechanism, n, params)?,
    })
}

/// Distribution-free guarantees: expected error at most (ln n)/scale, and
/// Pr[E ≥ (t + ln n)/scale] ≤ e^{−t}.
pub fn utility_bounds(n: usize, params: &PrivacyParams, t: f64) -> (f64, f64) {
    ((n as f64).ln() / params.scale(), (-t).exp())
}

/// The lower-bound instance p = 1/n: permute-and-flip's exact worst-case
/// error there, against the (Δ/2ε)·ln n floor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBoundReport {
    /// (Δ/(2ε)) · ln n.
    pub bound: f64,
    /// Exact expected error at p = 1/n: (ln n / scale) · (1 − 1/n)^n.
    pub exact: f64,
    /// exact / ((ln n)/scale) = (1 − 1/n)^n ∈ [1/4, 1/e] for n ≥ 2.
    pub ratio_to_upper: f64,
}

pub fn lower_bound(n: usize, params: &PrivacyParams) -> Result<LowerBoundReport> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the lower-bound instance needs at least two candidates".into(),
        ));
    }
    let nf = n as f64;
    let exact = worst_case_value(Mechanism::PermuteAndFlip, 1.0 / nf, n, params)?;
    let upper = nf.ln() / params.scale();
    Ok(LowerBoundReport {
        bound: nf.ln() / (4.0 * params.scale()),
        exact,
        ratio_to_upper: exact / upper,
    })
}

/// Result of exhaustively checking differential privacy on a bounded score
/// lattice.
#[derive(Debug, Clone, Serialize)]
pub struct PrivacyReport {
    /// Largest |ln Pr[M(q)=r] − ln Pr[M(q̃)=r]| over all checked pairs.
    pub max_log_ratio: f64,
    /// The ε the ratios must not exceed.
    pub bound: f64,
    /// Largest |log-ratio − ε| over pairs where the bound is an equality
    /// (q_r strictly below the maximum).
    pub max_tightness_violation: f64,
    pub pairs_checked: usize,
    pub holds: bool,
}

/// Checks Pr[M(q)=r] vs Pr[M(q̃)=r] for every vector q on the lattice
/// {0, −h, …, −hk}ⁿ (with q_* = 0) and every candidate r, where h = 2Δ and
/// q̃ = q + 2Δ·e_r for non-maximal r — or, under the monotonic flag, h = Δ
/// and q̃ = q + Δ·e_r. For maximal r the worst-case neighbor lowers every
/// other score by h; it is checked whenever it stays on the lattice. The
/// non-maximal constraints must be tight for permute-and-flip.
pub fn verify_privacy_on_lattice(
    n: usize,
    k: usize,
    params: &PrivacyParams,
) -> Result<PrivacyReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one candidate".into()));
    }
    let raw_count = ((k + 1) as f64).powi(n as i32);
    if raw_count > 2e6 {
        return Err(Error::TooLarge {
            what: "lattice vectors",
            got: raw_count as usize,
            limit: 2_000_000,
        });
    }
    let h = if params.monotonic() {
        params.sensitivity()
    } else {
        2.0 * params.sensitivity()
    };
    let eps = params.epsilon();

    let mut report = PrivacyReport {
        max_log_ratio: 0.0,
        bound: eps,
        max_tightness_violation: 0.0,
        pairs_checked: 0,
    holds: true,
    };

    let mut levels = vec![0usize; n];
    loop {
        if levels.iter().any(|&l| l == 0) {
            let values: Vec<f64> = levels.iter().map(|&l| -h * l as f64).collect();
            let scores = QualityScores::new(values.clone())?;
            let base = pmf_pf_dp(&scores, params);
            for r in 0..n {
                let neighbor_values = if levels[r] > 0 {
                    // Raise q_r by one step.
                    let mut v = values.clone();
                    v[r] += h;
                    Some(v)
                } else if levels.iter().enumerate().all(|(s, &l)| s == r || l + 1 <= k) {
                    // Lower every other score by one step.
                    Some(
                        values
                            .iter()
                            .enumerate()
                            .map(|(s, &x)| if s == r { x } else { x - h })
                            .collect(),
                    )
                } else {
                    None
                };
                let Some(neighbor_values) = neighbor_values else {
                    continue;
                };
                let neighbor = QualityScores::new(neighbor_values)?;
                let other = pmf_pf_dp(&neighbor, params);
                let log_ratio = (other.probs()[r].ln() - base.probs()[r].ln()).abs();
                report.max_log_ratio = report.max_log_ratio.max(log_ratio);
                report.pairs_checked += 1;
                if levels[r] > 0 {
                    report.max_tightness_violation =
                        report.max_tightness_violation.max((log_ratio - eps).abs());
                }
            }
        }
        // Odometer over {0..k}^n.
        let mut i = 0;
        loop {
            if i == n {
                report.holds = report.max_log_ratio <= eps + 1e-9;
                return Ok(report);
            }
            if levels[i] < k {
                levels[i] += 1;
                break;
            }
            levels[i] = 0;
            i += 1;
        }
    }
}

/// Deviations found while spot-checking the regularity properties
/// (permutation equivariance, shift invariance, score monotonicity) of the
/// exact permute-and-flip and exponential pmfs on random instances.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    /// Symmetry and shift checks use dyadic inputs, so these are exact
    /// float comparisons; any nonzero deviation is a bug.
    pub max_symmetry_deviation: f64,
    pub max_shift_deviation: f64,
    /// max over trials of Pr[r] − Pr'[r] after raising q_r (should be ≤ 0
    /// up to 1e−12).
    pub max_monotonicity_violation: f64,
    pub trials: usize,
}

pub fn verify_regularity(params: &PrivacyParams, trials: usize, seed: u64) -> RegularityReport {
    let mut rng = stream_rng(seed, 0);
    let mut report = RegularityReport {
        max_symmetry_deviation: 0.0,
        max_shift_deviation: 0.0,
        max_monotonicity_violation: 0.0,
        trials,
    };
    for _ in 0..trials {
        let n = rng.gen_range(2..=8);
        // Dyadic grid keeps shifted/permuted recomputation bit-identical.
        let values: Vec<f64> = (0..n).map(|_| -0.25 * rng.gen_range(0..=24) as f64).collect();
        let scores = QualityScores::new(values.clone()).expect("finite");
        for dist_kind in 0..2 {
            let pmf = |s: &QualityScores| {
                if dist_kind == 0 {
                    pmf_pf_dp(s, params)
                } else {
                    pmf_exponential(s, params)
                }
            };
            let base = pmf(&scores);

            // Permutation equivariance (rotate by a random offset).
            let offset = rng.gen_range(0..n);
            let rotated: Vec<f64> = (0..n).map(|i| values[(i + offset) % n]).collect();
            let rotated = pmf(&QualityScores::new(rotated).expect("finite"));
            for i in 0..n {
                let d = (rotated.probs()[i] - base.probs()[(i + offset) % n]).abs();
                report.max_symmetry_deviation = report.max_symmetry_deviation.max(d);
            }

            // Shift invariance with a dyadic shift.
            let c = 0.5 * rng.gen_range(-16..=16) as f64;
            let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
            let shifted = pmf(&QualityScores::new(shifted).expect("finite"));
            for i in 0..n {
                let d = (shifted.probs()[i] - base.probs()[i]).abs();
                report.max_shift_deviation = report.max_shift_deviation.max(d);
            }

            // Monotonicity: raising q_r (and lowering the rest) cannot
            // decrease candidate r's probability.
            let r = rng.gen_range(0..n);
            let bumped: Vec<f64> = values
                .iter()
                .enumerate()
                .map(|(s, &v)| if s == r { v + 0.5 } else { v - 0.5 })
                .collect();
            let bumped = pmf(&QualityScores::new(bumped).expect("finite"));
            report.max_monotonicity_violation = report
                .max_monotonicity_violation
                .max(base.probs()[r] - bumped.probs()[r]);
        }
    }
    report
}

/// Expected error of report-noisy-max on the worst-case family
/// q = (c, …, c, 0) with c ≤ 0, via quadrature.
pub fn noisy_max_expected_error(
    c: f64,
    n: usize,
    params: &PrivacyParams,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(c.is_finite() && c <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "low score c ({c}) must be finite and ≤ 0"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one candidate".into()));
    }
    let mut values = vec![c; n - 1];
    values.push(0.0);
    let scores = QualityScores::new(values)?;
    let (dist, _) = pmf_noisy_max(&scores, params, cfg)?;
    expected_error(&dist, &scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::pmf_pf_subsets;

    fn params(eps: f64) -> PrivacyParams {
        PrivacyParams::new(eps, 1.0).unwrap()
    }

    fn q(v: &[f64]) -> QualityScores {
        QualityScores::new(v.to_vec()).unwrap()
    }

    #[test]
    fn expected_error_examples() {
        let scores = q(&[-2.0, 0.0]);
        let pp = params(1.0);
        let pf = expected_error(&pmf_pf_dp(&scores, &pp), &scores).unwrap();
        assert!((pf - 0.36787944117144233).abs() < 1e-15);
        let em = expected_error(&pmf_exponential(&scores, &pp), &scores).unwrap();
        assert!((em - 0.5378828427399902).abs() < 1e-15);

        let ties = q(&[3.0, 3.0, 3.0]);
        let e = expected_error(&pmf_pf_dp(&ties, &pp), &ties).unwrap();
        assert_eq!(e, 0.0);

        let other = pmf_pf_dp(&ties, &pp);
        assert!(matches!(
            expected_error(&other, &scores),
            Err(Error::LengthMismatch(3, 2))
        ));
    }

    #[test]
    fn ccdf_examples() {
        let scores = q(&[-2.0, 0.0]);
        let pp = params(1.0);
        let pf = pmf_pf_dp(&scores, &pp);
        assert_eq!(error_ccdf(&pf, &scores, 0.0).unwrap(), 1.0);
        assert!((error_ccdf(&pf, &scores, 2.0).unwrap() - 0.18393972058572117).abs() < 1e-15);
        assert_eq!(error_ccdf(&pf, &scores, 2.0 + 1e-9).unwrap(), 0.0);

        let profile = error_profile(&pf, &scores).unwrap();
        assert_eq!(profile.ccdf.len(), 2);
        assert!(profile.ccdf.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!((profile.expected_error - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn dominance_examples() {
        let report = check_dominance(&q(&[-2.0, 0.0]), &params(1.0)).unwrap();
        assert!(report.holds);
        assert_eq!(report.max_ccdf_violation, 0.0);
        assert!((report.em_pf_ratio - 1.4621171572600098).abs() < 1e-12);

        let report = check_dominance(&q(&[0.0, 0.0, 0.0]), &params(1.0)).unwrap();
        assert!(report.holds);
        assert_eq!(report.em_pf_ratio, 1.0); // 0/0 convention
    }

    #[test]
    fn worst_case_value_examples() {
        let pp = params(2.0);
        let em = worst_case_value(Mechanism::Exponential, 0.5, 3, &pp).unwrap();
        assert!((em - 0.34657359027997264).abs() < 1e-15);
        let pf = worst_case_value(Mechanism::PermuteAndFlip, 0.5, 3, &pp).unwrap();
        assert!((pf - 0.2888113252333105).abs() < 1e-15);

        // p = 1 is the zero-gap instance.
        assert_eq!(
            worst_case_value(Mechanism::PermuteAndFlip, 1.0, 7, &pp).unwrap(),
            0.0
        );
        assert!(worst_case_value(Mechanism::PermuteAndFlip, 0.0, 3, &pp).is_err());
        assert!(worst_case_value(Mechanism::ReportNoisyMax, 0.5, 3, &pp).is_err());
    }

    #[test]
    fn worst_case_matches_exact_pmf() {
        // The closed forms must agree with the exact distributions on the
        // worst-case family q = (c, …, c, 0).
        for &p in &[1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999] {
            for &n in &[2usize, 3, 8] {
                for &eps in &[0.5, 1.0, 2.0] {
                    let pp = params(eps);
                    let c = (p as f64).ln() / pp.scale();
                    let mut v = vec![c; n - 1];
                    v.push(0.0);
                    let scores = q(&v);
                    let pf_exact =
                        expected_error(&pmf_pf_subsets(&scores, &pp).unwrap(), &scores).unwrap();
                    let pf_formula =
                        worst_case_value(Mechanism::PermuteAndFlip, p, n, &pp).unwrap();
                    assert!(
                        (pf_exact - pf_formula).abs() < 1e-12,
                        "pf p={p} n={n} eps={eps}: {pf_exact} vs {pf_formula}"
                    );
                    let em_exact =
                        expected_error(&pmf_exponential(&scores, &pp), &scores).unwrap();
                    let em_formula = worst_case_value(Mechanism::Exponential, p, n, &pp).unwrap();
                    assert!((em_exact - em_formula).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn maximizer_examples() {
        // PF, n = 2: max of p·ln(1/p) is 1/e at p = 1/e.
        let (p_star, v_star) =
            worst_case_maximize(Mechanism::PermuteAndFlip, 2, &params(1.0)).unwrap();
        assert!((p_star - (-1.0f64).exp()).abs() < 1e-6, "p* = {p_star}");
        assert!((v_star - 0.36787944117144233).abs() < 1e-12, "v* = {v_star}");

        // EM, n = 2: the maximum dominates the value at p = 1/2.
        let (_, em_star) = worst_case_maximize(Mechanism::Exponential, 2, &params(1.0)).unwrap();
        assert!(em_star >= 0.4620981203732969 - 1e-12);
    }

    #[test]
    fn bounds_sandwich_the_maximum() {
        for &n in &[2usize, 16, 256, 1024] {
            let pp = params(1.0);
            let (upper, tail) = utility_bounds(n, &pp, 3.0);
            assert!((tail - (-3.0f64).exp()).abs() < 1e-15);
            let lb = lower_bound(n, &pp).unwrap();
            assert!(lb.exact >= lb.bound - 1e-12);
            for mech in [Mechanism::PermuteAndFlip, Mechanism::Exponential] {
                let (_, v_star) = worst_case_maximize(mech, n, &pp).unwrap();
                assert!(lb.bound <= v_star + 1e-12);
                assert!(v_star <= upper + 1e-9, "n={n}: {v_star} vs {upper}");
            }
        }
        let lb = lower_bound(2, &params(1.0)).unwrap();
        assert!((lb.bound - 0.34657359027997264).abs() < 1e-15);
        assert!((lb.exact - 0.34657359027997264).abs() < 1e-13);
        let lb = lower_bound(4, &params(1.0)).unwrap();
        assert!((lb.exact - 0.8772644003961807).abs() < 1e-13);
        assert!((lb.ratio_to_upper - 0.31640625).abs() < 1e-13);
    }

    #[test]
    fn privacy_on_small_lattices() {
        let report = verify_privacy_on_lattice(2, 1, &params(1.0)).unwrap();
        assert!(report.holds);
        assert!(report.max_log_ratio <= 1.0 + 1e-9);
        // Non-maximal constraints are exactly tight for permute-and-flip.
        assert!(report.max_tightness_violation < 1e-10);

        let report = verify_privacy_on_lattice(3, 2, &params(0.5)).unwrap();
        assert!(report.holds, "max log-ratio {}", report.max_log_ratio);
        assert!(report.max_tightness_violation < 1e-10);

        // Monotonic variant: Δ-step lattice, same ε bound.
        let report =
            verify_privacy_on_lattice(3, 2, &params(1.0).with_monotonic(true)).unwrap();
        assert!(report.holds);
        assert!(report.max_tightness_violation < 1e-10);

        // Single candidate: every ratio is 1 = e^0.
        let report = verify_privacy_on_lattice(1, 3, &params(1.0)).unwrap();
        assert_eq!(report.max_log_ratio, 0.0);
    }

    #[test]
    fn regularity_suite_is_clean() {
        let report = verify_regularity(&params(1.0), 200, 17);
        assert_eq!(report.max_symmetry_deviation, 0.0);
        assert_eq!(report.max_shift_deviation, 0.0);
        assert!(report.max_monotonicity_violation <= 1e-12);
    }

    #[test]
    fn noisy_max_error_on_worst_case_family() {
        // n = 2, c = −2, ε = 1: error = 2 · 0.75·e^{−1}.
        let err = noisy_max_expected_error(-2.0, 2, &params(1.0), &QuadratureConfig::default())
            .unwrap();
        assert!((err - 2.0 * 0.27590958087858175).abs() < 1e-7, "{err}");
        assert!(noisy_max_expected_error(2.0, 2, &params(1.0), &QuadratureConfig::default())
            .is_err());
    }
}
