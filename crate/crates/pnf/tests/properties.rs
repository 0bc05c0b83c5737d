//! Randomized invariants of the exact distributions and the analysis layer.

use pnf::analysis::{check_dominance, expected_error, worst_case_value};
use pnf::exact::{pmf_exponential, pmf_pf_dp, pmf_pf_permutation, pmf_pf_subsets};
use pnf::scores::{PrivacyParams, QualityScores};
use pnf::Mechanism;
use proptest::prelude::*;

fn epsilon() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.1), Just(0.5), Just(1.0), Just(2.0), Just(5.0)]
}

/// Arbitrary finite scores in a range where nothing underflows.
fn scores(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..=0.0, n)
}

/// Dyadic scores (multiples of 1/4): closed under permutation and shift, so
/// regularity properties must hold bitwise.
fn dyadic_scores(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-200i32..=0).prop_map(|t| t as f64 * 0.25), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pmfs_are_distributions(values in scores(1..=12), eps in epsilon()) {
        let q = QualityScores::new(values).unwrap();
        let params = PrivacyParams::new(eps, 1.0).unwrap();
        for dist in [pmf_pf_dp(&q, &params), pmf_exponential(&q, &params)] {
            prop_assert!(dist.probs().iter().all(|&p| (0.0..=1.0).contains(&p)));
            let sum: f64 = dist.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "sum = {sum}");
        }
    }

    #[test]
    fn exact_routes_agree(values in scores(2..=7), eps in epsilon()) {
        let q = QualityScores::new(values).unwrap();
        let params = PrivacyParams::new(eps, 1.0).unwrap();
        let a = pmf_pf_permutation(&q, &params).unwrap();
        let b = pmf_pf_subsets(&q, &params).unwrap();
        let c = pmf_pf_dp(&q, &params);
        for i in 0..q.len() {
            prop_assert!((a.probs()[i] - b.probs()[i]).abs() < 1e-12);
            prop_assert!((a.probs()[i] - c.probs()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_invariance_is_bitwise(values in dyadic_scores(2..=9), shift in -40i32..=40, eps in epsilon()) {
        let params = PrivacyParams::new(eps, 1.0).unwrap();
        let base = QualityScores::new(values.clone()).unwrap();
        let c = shift as f64 * 0.5;
        let shifted = QualityScores::new(values.iter().map(|v| v + c).collect()).unwrap();
        let (d0, d1) = (pmf_pf_dp(&base, &params), pmf_pf_dp(&shifted, &params));
        prop_assert_eq!(d0.probs(), d1.probs());
        let (e0, e1) = (pmf_exponential(&base, &params), pmf_exponential(&shifted, &params));
        prop_assert_eq!(e0.probs(), e1.probs());
    }

    #[test]
    fn permutation_equivariance_is_bitwise(values in dyadic_scores(2..=9), rot in 0usize..9, eps in epsilon()) {
        let params = PrivacyParams::new(eps, 1.0).unwrap();
        let n = values.len();
        let rot = rot % n;
        let rotated: Vec<f64> = (0..n).map(|i| values[(i + rot) % n]).collect();
        let base = pmf_pf_dp(&QualityScores::new(values).unwrap(), &params);
        let moved = pmf_pf_dp(&QualityScores::new(rotated).unwrap(), &params);
        for i in 0..n {
            prop_assert_eq!(moved.probs()[i], base.probs()[(i + rot) % n]);
        }
    }

    #[test]
    fn pf_dominates_em_everywhere(values in scores(2..=8), eps in epsilon()) {
        let q = QualityScores::new(values).unwrap();
        let params = PrivacyParams::new(eps, 1.0).unwrap();
        let report = check_dominance(&q, &params).unwrap();
        prop_assert!(report.max_ccdf_violation <= 1e-10, "violation {}", report.max_ccdf_violation);
        prop_assert!(report.em_pf_ratio >= 1.0 - 1e-9);
    }

    #[test]
    fn raising_a_score_raises_its_probability(values in scores(2..=8), idx in 0usize..8, eps in epsilon()) {
        let n = values.len();
        let r = idx % n;
        let params = PrivacyParams::new(eps, 1.0).unwrap();
        let base = pmf_pf_dp(&QualityScores::new(values.clone()).unwrap(), &params);
        let bumped_scores: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(s, &v)| if s == r { v + 1.0 } else { v - 1.0 })
            .collect();
        let bumped = pmf_pf_dp(&QualityScores::new(bumped_scores).unwrap(), &params);
        prop_assert!(bumped.probs()[r] >= base.probs()[r] - 1e-12);
    }

    #[test]
    fn worst_case_closed_forms_match_pmfs(p in 1e-6f64..=1.0, n in 2usize..=10, eps in epsilon()) {
        let params = PrivacyParams::new(eps, 1.0).unwrap();
        let c = p.ln() / params.scale();
        let mut values = vec![c; n - 1];
        values.push(0.0);
        let q = QualityScores::new(values).unwrap();
        let pf = expected_error(&pmf_pf_dp(&q, &params), &q).unwrap();
        let pf_formula = worst_case_value(Mechanism::PermuteAndFlip, p, n, &params).unwrap();
        prop_assert!((pf - pf_formula).abs() <= 1e-12 * pf.abs().max(1.0));
        let em = expected_error(&pmf_exponential(&q, &params), &q).unwrap();
        let em_formula = worst_case_value(Mechanism::Exponential, p, n, &params).unwrap();
        prop_assert!((em - em_formula).abs() <= 1e-12 * em.abs().max(1.0));
        prop_assert!(pf_formula <= em_formula + 1e-12);
    }
}
