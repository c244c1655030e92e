//! Property-based invariants across the public API.

use fbst::asymptotics::{decide, disjunction_evalue, qq_confidence, DecisionThresholds, Verdict};
use fbst::pipeline::run_test;
use fbst::spec::TestSpec;
use fbst::special::{chi2_cdf, chi2_quantile};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qq_is_monotone_in_c(t in 1u32..6, dh in 0u32..6, c1 in 0.0f64..1.0, c2 in 0.0f64..1.0) {
        let h = dh.min(t);
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let a = qq_confidence(t, h, lo).unwrap();
        let b = qq_confidence(t, h, hi).unwrap();
        prop_assert!(a <= b + 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn chi2_quantile_inverts_cdf(k in 1u32..8, c in 0.001f64..0.999) {
        let x = chi2_quantile(k, c).unwrap();
        let back = chi2_cdf(k, x).unwrap();
        prop_assert!((back - c).abs() < 1e-9, "k={k} c={c} back={back}");
    }

    #[test]
    fn disjunction_dominates_each_term(evs in prop::collection::vec(0.0f64..=1.0, 1..6)) {
        let d = disjunction_evalue(&evs).unwrap();
        for &e in &evs {
            prop_assert!(d >= e);
        }
        prop_assert!(evs.contains(&d));
    }

    #[test]
    fn decision_partitions_the_unit_interval(sev in 0.0f64..=1.0) {
        let th = DecisionThresholds::default();
        let v = decide(sev, th).verdict;
        let expected = if sev < th.c1 {
            Verdict::Reject
        } else if sev < th.c2 {
            Verdict::Neutral
        } else {
            Verdict::Accept
        };
        prop_assert_eq!(v, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn beta_pipeline_outputs_are_coherent(
        a in 1.0f64..6.0,
        b in 1.0f64..6.0,
        successes in 0u64..12,
        extra in 0u64..12,
        h0 in 0.05f64..0.95,
    ) {
        let trials = successes + extra;
        let spec = TestSpec::from_json(&format!(
            r#"{{
            "model": {{
                "family": "beta_bernoulli",
                "prior": {{"a": {a}, "b": {b}}},
                "data": {{"successes": {successes}, "trials": {trials}}}
            }},
            "hypothesis": {{"type": "point", "value": [{h0}]}},
            "sampling": {{"method": "quadrature"}}
        }}"#
        )).unwrap();
        let out = run_test(&spec).unwrap();
        let r = &out.report.result;
        prop_assert!((0.0..=1.0).contains(&r.ev));
        prop_assert!((r.ev + r.ev_bar - 1.0).abs() < 1e-12);
        prop_assert!(r.s_star <= r.s_hat + 1e-9);
        prop_assert!(r.s_star > 0.0);
        let sev = r.sev.unwrap();
        prop_assert!((0.0..=1.0).contains(&sev));
        for v in [r.s_hat, r.s_star, r.ev, r.se, sev] {
            prop_assert!(v.is_finite());
        }
    }
}
