use jscc_core::bounds::{achievable_cost, cost_lower_bound, Cost};
use jscc_core::control_loop::{LqgWeights, PlantParams};
use jscc_core::sdr_lab::opta_sdr;
use proptest::prelude::*;

fn setup(alpha: f64, q: f64, r: f64, w: f64, v: f64) -> (PlantParams<f64>, LqgWeights<f64>) {
    (PlantParams::new(alpha, w, v, 1.0).unwrap(), LqgWeights::new(q, r, q, 1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lower_bound_never_exceeds_achievable(
        alpha in 1.01..5.0f64, q in 0.01..5.0f64, r in 0.0..5.0f64, w in 0.01..5.0f64, v in 0.0..5.0f64,
        snr in 0.01..1000.0f64, share in 0.0..=1.0f64, kc in 1usize..=3,
    ) {
        let (p, wt) = setup(alpha, q, r, w, v);
        let sdr0 = share * opta_sdr(snr, kc, 1);
        prop_assume!(sdr0 > 0.0);
        let lower = cost_lower_bound(&p, &wt, snr, kc, 1).as_scalar();
        let upper = achievable_cost(&p, &wt, sdr0).as_scalar();
        prop_assert!(lower <= upper * (1.0 + 1e-12), "{} > {}", lower, upper);
    }

    #[test]
    fn bounds_decrease_in_snr_and_increase_in_alpha(
        alpha in 1.01..4.0f64, q in 0.01..5.0f64, r in 0.0..5.0f64, w in 0.01..5.0f64, v in 0.0..5.0f64,
        snr in 0.01..500.0f64, bump in 1.001..3.0f64,
    ) {
        let (p, wt) = setup(alpha, q, r, w, v);
        let (p_hot, _) = setup(alpha * bump, q, r, w, v);
        for kc in [1, 2] {
            let low = cost_lower_bound(&p, &wt, snr, kc, 1);
            let high = cost_lower_bound(&p, &wt, snr * bump, kc, 1);
            prop_assert!(high.as_scalar() <= low.as_scalar());
            if low.is_finite() {
                prop_assert!(high.as_scalar() < low.as_scalar());
            }
            let hot = cost_lower_bound(&p_hot, &wt, snr, kc, 1);
            prop_assert!(hot.as_scalar() >= low.as_scalar());
        }
        let up = achievable_cost(&p, &wt, 2.0 * snr);
        prop_assert!(achievable_cost(&p, &wt, 2.0 * snr * bump).as_scalar() <= up.as_scalar());
        prop_assert!(achievable_cost(&p_hot, &wt, 2.0 * snr).as_scalar() >= up.as_scalar());
    }

    #[test]
    fn divergence_exactly_at_frontier(alpha in 1.01..5.0f64, q in 0.01..5.0f64, w in 0.01..5.0f64) {
        let (p, wt) = setup(alpha, q, 1.0, w, 0.0);
        let edge = alpha * alpha - 1.0;
        prop_assert_eq!(achievable_cost(&p, &wt, edge), Cost::Diverges);
        prop_assert!(achievable_cost(&p, &wt, edge * (1.0 + 1e-9)).is_finite());
    }
}

#[test]
fn cost_is_nonincreasing_in_sdr0() {
    let (p, wt) = setup(3.0, 1.0, 0.0, 1.0, 0.0);
    for snr in [5.0, 10.0, 40.0] {
        let rep = achievable_cost(&p, &wt, 2.0 * snr).as_scalar();
        let mid = achievable_cost(&p, &wt, 3.0 * snr).as_scalar();
        let opta = achievable_cost(&p, &wt, opta_sdr(snr, 2, 1)).as_scalar();
        assert!(rep >= mid && mid >= opta, "{rep} {mid} {opta}");
        assert_eq!(opta, cost_lower_bound(&p, &wt, snr, 2, 1).as_scalar());
    }
}
