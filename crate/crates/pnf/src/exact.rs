//! Exact selection distributions.
//!
//! Three independent routes compute the permute-and-flip pmf — brute-force
//! permutation enumeration, subset inclusion–exclusion, and the production
//! O(n²) recurrence — so each can serve as an oracle for the others. The
//! exponential mechanism is a softmax; report-noisy-max is an adaptive
//! quadrature over the Laplace noise.

use serde::Serialize;

use crate::quadrature::{adaptive_simpson, GaussLegendre};
use crate::scores::{coin_probabilities, PrivacyParams, QualityScores};
use crate::{Error, Result};

/// Largest n for the permutation-enumeration oracle (n! growth).
pub const PERMUTATION_ORACLE_LIMIT: usize = 10;
/// Largest n for the subset inclusion–exclusion oracle (2ⁿ growth).
pub const SUBSET_ORACLE_LIMIT: usize = 20;
/// Largest n for the report-noisy-max quadrature (n² integrand cost).
pub const NOISY_MAX_LIMIT: usize = 1000;

/// When the largest term of the alternating subset sum exceeds this multiple
/// of the partial sum, too many leading digits have cancelled and the
/// candidate is recomputed by exact Gauss–Legendre integration.
const CANCELLATION_GUARD: f64 = 10.0;

/// How a [`SelectionDistribution`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PmfMethod {
    #[serde(rename = "em")]
    Exponential,
    #[serde(rename = "pf-permutation")]
    PfPermutation,
    #[serde(rename = "pf-subsets")]
    PfSubsets,
    #[serde(rename = "pf-dp")]
    PfDp,
    #[serde(rename = "rnm-quadrature")]
    NoisyMaxQuadrature,
}

/// A probability mass function over candidates, tagged with its origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionDistribution {
    probs: Vec<f64>,
    method: PmfMethod,
}

impl SelectionDistribution {
    /// Validates non-negativity (entries above −1e−12 are clamped to 0) and
    /// total mass 1 within 1e−9.
    pub fn new(probs: Vec<f64>, method: PmfMethod) -> Result<Self> {
        let mut probs = probs;
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "probability at index {i} is {p}"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { probs, method })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn method(&self) -> PmfMethod {
        self.method
    }

    /// Total-variation distance to another distribution on the same support.
    pub fn tv_distance(&self, other: &SelectionDistribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0)
    }
}

/// Exponential-mechanism pmf: softmax of the coin probabilities.
///
/// The denominator is summed in ascending order, so permuting the scores
/// permutes the output bit-for-bit.
pub fn pmf_exponential(scores: &QualityScores, params: &PrivacyParams) -> SelectionDistribution {
    let p = coin_probabilities(scores, params);
    let total = p.total();
    let probs = p.values().iter().map(|x| x / total).collect();
    SelectionDistribution {
        probs,
        method: PmfMethod::Exponential,
    }
}

/// Permute-and-flip pmf by enumerating all n! candidate orders (oracle).
///
/// For a fixed order, the probability that r is the first head is
/// p_r · Π_{s before r} (1 − p_s); averaging over orders gives the pmf.
pub fn pmf_pf_permutation(
    scores: &QualityScores,
    params: &PrivacyParams,
) -> Result<SelectionDistribution> {
    let n = scores.len();
    if n > PERMUTATION_ORACLE_LIMIT {
        return Err(Error::TooLarge {
            what: "candidates (permutation oracle)",
            got: n,
            limit: PERMUTATION_ORACLE_LIMIT,
        });
    }
    let p = coin_probabilities(scores, params);
    let p = p.values();
    let mut acc = vec![0.0; n];
    for_each_permutation(n, |perm| {
        let mut prefix = 1.0;
        for &r in perm {
            acc[r] += p[r] * prefix;
            prefix *= 1.0 - p[r];
        }
    });
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let probs = acc.iter().map(|a| a / factorial).collect();
    SelectionDistribution::new(probs, PmfMethod::PfPermutation)
}

/// Visits every permutation of 0..n (Heap's algorithm, iterative).
fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut visit: F) {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            visit(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Permute-and-flip pmf by subset inclusion–exclusion (oracle):
/// Pr[r] = p_r · Σ_{S ⊆ others} (−1)^{|S|} / (|S|+1) · Π_{s∈S} p_s.
pub fn pmf_pf_subsets(
    scores: &QualityScores,
    params: &PrivacyParams,
) -> Result<SelectionDistribution> {
    let n = scores.len();
    if n > SUBSET_ORACLE_LIMIT {
        return Err(Error::TooLarge {
            what: "candidates (subset oracle)",
            got: n,
            limit: SUBSET_ORACLE_LIMIT,
        });
    }
    let p = coin_probabilities(scores, params);
    let p = p.values();
    let full = 1usize << n;
    let mut prod = vec![1.0f64; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        prod[mask] = prod[mask & (mask - 1)] * p[low];
    }
    let mut probs = vec![0.0; n];
    for (r, out) in probs.iter_mut().enumerate() {
        let bit = 1usize << r;
        let mut g = 0.0;
        for (mask, &pm) in prod.iter().enumerate() {
            if mask & bit != 0 {
                continue;
            }
            let k = mask.count_ones();
            let term = pm / (k as f64 + 1.0);
            g += if k % 2 == 0 { term } else { -term };
        }
        *out = p[r] * g;
    }
    SelectionDistribution::new(probs, PmfMethod::PfSubsets)
}

/// Permute-and-flip pmf by the O(n²)-time, O(n)-space recurrence.
///
/// With e_k the elementary symmetric sums of all coins and
/// T(k, r) = e_k − p_r·T(k−1, r) the leave-one-out sums,
/// Pr[r] = p_r · Σ_k (−1)^k T(k, r) / (k+1). The alternating sum can cancel
/// catastrophically (coins near 1 at large n), so any candidate whose
/// largest term dwarfs its result — or whose tables overflow — is recomputed
/// through the equivalent integral Pr[r] = p_r ∫₀¹ Π_{s≠r} (1 − u·p_s) du,
/// which a ⌈n/2⌉-node Gauss–Legendre rule evaluates exactly (the integrand
/// is a polynomial of degree n−1 with all-positive node values).
///
/// Both the symmetric sums and the node products accumulate over coins in
/// ascending order, making the output exactly equivariant under input
/// permutations.
pub fn pmf_pf_dp(scores: &QualityScores, params: &PrivacyParams) -> SelectionDistribution {
    let p = coin_probabilities(scores, params);
    let probs = pf_probabilities(p.values());
    SelectionDistribution {
        probs,
        method: PmfMethod::PfDp,
    }
}

fn pf_probabilities(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("coins are finite"));

    // Rolling elementary symmetric sums over all n coins.
    let mut e = vec![0.0f64; n + 1];
    e[0] = 1.0;
    for (i, &x) in sorted.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    let tables_finite = e.iter().all(|v| v.is_finite());

    let mut probs = vec![0.0; n];
    let mut fallback = Vec::new();
    if tables_finite {
        for r in 0..n {
            let mut t = 0.0; // T(k−1, r), starts as T(−1) = 0
            let mut g = 0.0;
            let mut max_term = 0.0f64;
            let mut sign = 1.0;
            for (k, &ek) in e.iter().enumerate().take(n) {
                t = ek - p[r] * t;
                let term = sign * t / (k as f64 + 1.0);
                g += term;
                max_term = max_term.max(term.abs());
                sign = -sign;
            }
            if g.is_finite() && g > 0.0 && max_term <= CANCELLATION_GUARD * g {
                probs[r] = p[r] * g;
            } else {
                fallback.push(r);
            }
        }
    } else {
        fallback.extend(0..n);
    }

    if !fallback.is_empty() {
        let rule = GaussLegendre::new(n.div_ceil(2).max(1))
            .expect("node count is positive");
        let node_products: Vec<f64> = rule
            .nodes()
            .iter()
            .map(|&u| sorted.iter().fold(1.0, |acc, &x| acc * (1.0 - u * x)))
            .collect();
        for &r in &fallback {
            let mut g = 0.0;
            for ((&u, &w), &np) in rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .zip(&node_products)
            {
                g += w * np / (1.0 - u * p[r]);
            }
            probs[r] = p[r] * g;
        }
    }
    probs
}

/// The full S/T tables behind [`pmf_pf_dp`], materialized for inspection and
/// invariant tests. S(k, r) holds the k-th elementary symmetric sum of the
/// first r coins; T(k, r) the k-th symmetric sum of all coins except r.
#[derive(Debug, Clone)]
pub struct SymmetricSumTables {
    /// s[k][r], k ∈ 0..=n, r ∈ 0..=n (first r coins).
    pub s: Vec<Vec<f64>>,
    /// t[k][r], k ∈ 0..=n−1, r ∈ 0..n (all coins except r).
    pub t: Vec<Vec<f64>>,
}

/// Builds the quadratic-space tables (small n; intended for verification).
pub fn build_dp_tables(p: &[f64]) -> SymmetricSumTables {
    let n = p.len();
    let mut s = vec![vec![0.0; n + 1]; n + 1];
    s[0] = vec![1.0; n + 1];
    for k in 1..=n {
        for r in 1..=n {
            s[k][r] = s[k][r - 1] + p[r - 1] * s[k - 1][r - 1];
        }
    }
    let mut t = vec![vec![0.0; n]; n];
    for r in 0..n {
        for k in 0..n {
            let prev = if k == 0 { 0.0 } else { t[k - 1][r] };
            t[k][r] = s[k][n] - p[r] * prev;
        }
    }
    SymmetricSumTables { s, t }
}

/// Tolerances for the report-noisy-max quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Absolute tolerance per pmf entry.
    pub abs_tol: f64,
    /// Laplace mass allowed outside the truncated integration window, per
    /// tail.
    pub tail_mass: f64,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            tail_mass: 1e-12,
            max_depth: 45,
        }
    }
}

fn laplace_pdf(x: f64, b: f64) -> f64 {
    (-x.abs() / b).exp() / (2.0 * b)
}

fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Report-noisy-max pmf with Laplace(1/scale) noise:
/// Pr[r] = ∫ f(x) Π_{s≠r} F(q_r − q_s + x) dx.
///
/// Each entry is integrated panel-by-panel between the integrand's kink
/// points (x = 0 and x = q_s − q_r) over a window holding all but
/// `tail_mass` of the noise. Returns the renormalized pmf and the
/// pre-normalization defect |Σ − 1|.
pub fn pmf_noisy_max(
    scores: &QualityScores,
    params: &PrivacyParams,
    cfg: &QuadratureConfig,
) -> Result<(SelectionDistribution, f64)> {
    let n = scores.len();
    if n > NOISY_MAX_LIMIT {
        return Err(Error::TooLarge {
            what: "candidates (noisy-max quadrature)",
            got: n,
            limit: NOISY_MAX_LIMIT,
        });
    }
    let q = scores.values();
    let b = 1.0 / params.scale();
    let window = b * (0.5 / cfg.tail_mass).ln();

    let mut probs = vec![0.0; n];
    for r in 0..n {
        let mut kinks: Vec<f64> = q
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != r)
            .map(|(_, &qs)| qs - q[r])
            .chain(std::iter::once(0.0))
            .filter(|x| x.abs() < window)
            .collect();
        kinks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        kinks.dedup();
        let mut pts = Vec::with_capacity(kinks.len() + 2);
        pts.push(-window);
        pts.extend(kinks);
        pts.push(window);

        let integrand = |x: f64| {
            let mut v = laplace_pdf(x, b);
            for (s, &qs) in q.iter().enumerate() {
                if s != r {
                    v *= laplace_cdf(q[r] - qs + x, b);
                }
            }
            v
        };
        let panel_tol = cfg.abs_tol / (pts.len() - 1) as f64;
        let mut total = 0.0;
        let mut achieved = 0.0;
        let mut converged = true;
        for w in pts.windows(2) {
            let res = adaptive_simpson(integrand, w[0], w[1], panel_tol, cfg.max_depth);
            total += res.value;
            achieved += res.error_estimate;
            converged &= res.converged;
        }
        if !converged {
            return Err(Error::Accuracy {
                requested: cfg.abs_tol,
                achieved,
                estimate: total,
            });
        }
        probs[r] = total;
    }
    let sum: f64 = probs.iter().sum();
    let defect = (sum - 1.0).abs();
    for p in &mut probs {
        *p /= sum;
    }
    Ok((
        SelectionDistribution::new(probs, PmfMethod::NoisyMaxQuadrature)?,
        defect,
    ))
}

/// Residuals of the two-case selection-probability recurrence.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RecurrenceReport {
    /// Case q_r < q_*: |Pr[r] − p_r · Pr[r after raising q_r to q_*]|.
    pub max_case1_violation: f64,
    /// Case q_r = q_*: |Pr[r] − (1 − Σ_{low} Pr)/n_*|.
    pub max_case2_violation: f64,
    pub cases_checked: usize,
}

/// Checks the recurrence that uniquely pins down the permute-and-flip pmf.
pub fn verify_recurrence(scores: &QualityScores, params: &PrivacyParams) -> RecurrenceReport {
    let probs = pmf_pf_dp(scores, params);
    let probs = probs.probs();
    let p = coin_probabilities(scores, params);
    let p = p.values();
    let q_star = scores.max();
    let n_star = scores.max_count() as f64;

    let mut report = RecurrenceReport {
        max_case1_violation: 0.0,
        max_case2_violation: 0.0,
        cases_checked: 0,
    };
    let mut low_sum = 0.0;
    for (r, &qr) in scores.values().iter().enumerate() {
        if qr < q_star {
            low_sum += probs[r];
            let mut raised = scores.values().to_vec();
            raised[r] = q_star;
            let raised = QualityScores::new(raised).expect("still finite");
            let rhs = p[r] * pmf_pf_dp(&raised, params).probs()[r];
            report.max_case1_violation = report.max_case1_violation.max((probs[r] - rhs).abs());
            report.cases_checked += 1;
        }
    }
    let target = (1.0 - low_sum) / n_star;
    for (r, &qr) in scores.values().iter().enumerate() {
        if qr == q_star {
            report.max_case2_violation =
                report.max_case2_violation.max((probs[r] - target).abs());
            report.cases_checked += 1;
        }
    }
    report
}
