//! Property checks on forecast distributions and regions built from
//! arbitrary finite log-likelihood vectors.

use garma_core::{hdr, point_forecast, ForecastDistribution};
use proptest::prelude::*;

fn arb_dist() -> impl Strategy<Value = ForecastDistribution> {
    prop::collection::vec(-40.0f64..40.0, 1..80).prop_map(|lls| {
        ForecastDistribution::from_log_likelihoods(&lls, None, Vec::new()).unwrap()
    })
}

proptest! {
    #[test]
    fn probabilities_normalize_and_stay_nonnegative(dist in arb_dist()) {
        let sum: f64 = dist.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(dist.probs().iter().all(|&p| p >= 0.0));
        prop_assert_eq!(dist.len() as u64, dist.truncation_bound + 1);
    }

    #[test]
    fn point_forecast_is_a_modal_support_point(dist in arb_dist()) {
        let point = point_forecast(&dist);
        prop_assert!(point <= dist.truncation_bound);
        let pmax = dist.probs().iter().cloned().fold(0.0f64, f64::max);
        prop_assert_eq!(dist.prob(point), pmax);
        // ties break toward the smaller count
        for y in 0..point {
            prop_assert!(dist.prob(y) < pmax);
        }
    }

    #[test]
    fn regions_are_dense_covered_and_nested(dist in arb_dist()) {
        let r50 = hdr(&dist, 0.5).unwrap();
        let r75 = hdr(&dist, 0.75).unwrap();
        let r95 = hdr(&dist, 0.95).unwrap();

        for r in [&r50, &r75, &r95] {
            prop_assert!(r.attained_mass >= r.level);
            prop_assert!(r.members.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(r.members.iter().all(|&y| y <= dist.truncation_bound));
            // every member is at least as probable as every non-member
            let floor = r.members.iter().map(|&y| dist.prob(y)).fold(f64::INFINITY, f64::min);
            for y in dist.support() {
                if !r.contains(y) {
                    prop_assert!(dist.prob(y) <= floor);
                }
            }
        }
        prop_assert!(r50.members.iter().all(|y| r75.contains(*y)));
        prop_assert!(r75.members.iter().all(|y| r95.contains(*y)));
    }
}
