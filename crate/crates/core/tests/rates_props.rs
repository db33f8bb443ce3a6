use cgrg_core::measures::q_measure_adaptive;
use cgrg_core::rates::{eta_x, isolated_root, rate_eta1, rate_i, rate_j, rate_xi1, rate_zeta};
use cgrg_core::{ColourMeasure, DegreeDistribution, Geometry, ModelParameters, PairMeasure, ball_volume};
use proptest::prelude::*;

fn degree_law() -> impl Strategy<Value = DegreeDistribution> {
    prop::collection::vec(0.0f64..1.0, 2..12).prop_filter_map("needs mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-3).then(|| DegreeDistribution::new(w.iter().map(|x| x / s).collect()).unwrap())
    })
}

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Beyond `x = ⟨δ⟩` the slope is `1 − ⟨δ⟩/x + ½log(x/ρc)`, nonnegative
    /// once `⟨δ⟩ ≥ ρc`.
    #[test]
    fn eta_x_nondecreasing_past_the_mean(delta in degree_law(), frac in 0.05f64..1.0, d in 1usize..=3) {
        let m = delta.mean();
        prop_assume!(m > 0.05);
        let c = frac * m / ball_volume(d);
        let values: Vec<f64> = (0..=20).map(|j| eta_x(&delta, m + 0.25 * j as f64, c, d).unwrap()).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{values:?}");
        }
    }

    #[test]
    fn monochrome_eta1_matches_rate_i(lambda in 0.05f64..8.0, c in 0.2f64..3.0, d in 1usize..=3) {
        let rc = ball_volume(d) * c;
        let p = ModelParameters::monochrome(d, c, Geometry::Torus).unwrap();
        let eta = rate_eta1(&DegreeDistribution::poisson(lambda, 1e-15).unwrap(), c, d).unwrap().value();
        let omega = ColourMeasure::from_weights(vec![1.0]).unwrap();
        let i = rate_i(&omega, &PairMeasure::from_matrix(1, &[lambda]).unwrap(), &p).unwrap().value();
        let closed = 0.5 * lambda * (lambda / rc).ln() - 0.5 * lambda + 0.5 * rc;
        prop_assert!((eta - i).abs() < 1e-9, "{eta} vs {i}");
        prop_assert!((eta - closed).abs() < 1e-9);
    }

    #[test]
    fn eta1_nonnegative(delta in degree_law(), c in 0.2f64..3.0, d in 1usize..=3) {
        prop_assert!(rate_eta1(&delta, c, d).unwrap().value() >= 0.0);
    }

    #[test]
    fn xi1_nonnegative_and_zero_only_at_typical(y in 0.0f64..1.0, c in 0.2f64..3.0, d in 1usize..=3) {
        let v = rate_xi1(y, c, d).unwrap().value();
        let typical = (-ball_volume(d) * c).exp();
        prop_assert!(v >= 0.0);
        if (y - typical).abs() > 1e-3 {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn isolated_root_residual(y in 0.0f64..0.999, c in 0.1f64..4.0, d in 1usize..=3) {
        let a = isolated_root(y, c, d).unwrap().x;
        let target = ball_volume(d) * c * (1.0 - y);
        prop_assert!((a * -(-a).exp_m1() - target).abs() < 1e-12 * (1.0 + target));
    }

    #[test]
    fn zeta_monochrome_nonnegative(x in 0.0f64..8.0, c in 0.2f64..3.0, d in 1usize..=3) {
        let p = ModelParameters::monochrome(d, c, Geometry::Torus).unwrap();
        let v = rate_zeta(x, &p).unwrap().value();
        let typical = ball_volume(d) * c / 2.0;
        prop_assert!(v >= 0.0);
        if (x - typical).abs() > 1e-2 {
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn rate_i_nonnegative(omega in simplex(2), varpi in prop::collection::vec(0.0f64..3.0, 3)) {
        let p = ModelParameters::new(2, vec![0.4, 0.6], vec![vec![1.0, 0.5], vec![0.5, 2.0]], Geometry::Torus).unwrap();
        let omega = ColourMeasure::from_weights(omega).unwrap();
        let m = [varpi[0], varpi[1], varpi[1], varpi[2]];
        prop_assert!(rate_i(&omega, &PairMeasure::from_matrix(2, &m).unwrap(), &p).unwrap().value() >= 0.0);
    }

    #[test]
    fn rate_j_nonnegative_on_product_poisson(mu1 in simplex(2), varpi in prop::collection::vec(0.01f64..3.0, 3)) {
        let p = ModelParameters::new(2, vec![0.4, 0.6], vec![vec![1.0, 0.5], vec![0.5, 2.0]], Geometry::Torus).unwrap();
        let m = [varpi[0], varpi[1], varpi[1], varpi[2]];
        let varpi = PairMeasure::from_matrix(2, &m).unwrap();
        let q = q_measure_adaptive(&varpi, &ColourMeasure::from_weights(mu1).unwrap(), 1e-12).unwrap();
        prop_assert!(rate_j(&varpi, &q.measure, &p).unwrap().value() >= 0.0);
    }
}

/// Below `⟨δ⟩ = ρc` the slope at the mean is `½log(⟨δ⟩/ρc) < 0`, so the
/// monotonicity only holds once `⟨δ⟩ ≥ ρc`.
#[test]
fn eta_x_can_decrease_when_mean_is_below_rho_c() {
    let delta = DegreeDistribution::poisson(1.0, 1e-15).unwrap();
    let at_mean = eta_x(&delta, 1.0, 1.0, 2).unwrap();
    let further = eta_x(&delta, 1.2, 1.0, 2).unwrap();
    assert!(further < at_mean, "{further} !< {at_mean}");
}

#[test]
fn rates_vanish_at_typical_points_for_several_models() {
    for d in 1..=3 {
        for &c in &[0.5, 1.0, 2.0] {
            let rc = ball_volume(d) * c;
            assert!(rate_xi1((-rc).exp(), c, d).unwrap().value() < 1e-12);
            assert!(rate_eta1(&DegreeDistribution::poisson(rc, 1e-15).unwrap(), c, d).unwrap().value() < 1e-9);
        }
    }
}
