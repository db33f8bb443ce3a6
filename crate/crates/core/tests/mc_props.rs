use std::f64::consts::PI;

use cgrg_core::mc::{Event, ExperimentConfig, Observable, Sampler, estimate_tail, run_typical};
use cgrg_core::verify::two_colour_example;
use cgrg_core::{Geometry, ModelParameters, TiltingPotentials};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tail_estimates_do_not_depend_on_the_schedule(seed in any::<u64>(), g in -0.5f64..0.5) {
        let tilt = TiltingPotentials::new(vec![0.1, -0.1], vec![vec![g, 0.0], vec![0.0, g]]).unwrap();
        let cfg = ExperimentConfig::new(two_colour_example(), vec![50, 80], 64, seed, Observable::EdgesPerVertex)
            .with_event(Event::at_least(Observable::EdgesPerVertex, 1.5))
            .with_sampler(Sampler::Tilted { potentials: tilt });
        let one = in_pool(1, || estimate_tail(&cfg).unwrap());
        let many = in_pool(4, || estimate_tail(&cfg).unwrap());
        prop_assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
        let weights = |e: &cgrg_core::mc::TailEstimate| e.records.iter().map(|r| r.log_weight.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(weights(&one), weights(&many));
    }

    #[test]
    fn typical_summaries_do_not_depend_on_the_schedule(seed in any::<u64>()) {
        let cfg = ExperimentConfig::new(two_colour_example(), vec![100], 32, seed, Observable::NeighbourhoodTv);
        let one = in_pool(1, || run_typical(&cfg).unwrap());
        let many = in_pool(3, || run_typical(&cfg).unwrap());
        prop_assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
    }
}

/// Twenty seeded tilts with `|f|, |g| ≤ 0.5`. Tilts with `g ≠ 0` are
/// weighted against the independent-edge law, so they are compared with
/// plain MC under that law; colour-only tilts against the geometric law.
#[test]
fn importance_sampling_agrees_with_plain_mc() {
    let params = two_colour_example();
    let n = 20;
    let replicas = 20_000;
    let event = Event::at_least(Observable::EdgesPerVertex, 1.8);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut report = Vec::new();
    let mut failures = 0;
    for i in 0..20 {
        let f: Vec<f64> = (0..2).map(|_| rng.random_range(-0.5..0.5)).collect();
        let colour_only = i % 4 == 0;
        let mut g = vec![vec![0.0; 2]; 2];
        if !colour_only {
            for a in 0..2 {
                for b in a..2 {
                    let v = rng.random_range(-0.5..0.5);
                    g[a][b] = v;
                    g[b][a] = v;
                }
            }
        }
        let reference = if colour_only { Sampler::Null } else { Sampler::Bernoulli };
        let base = ExperimentConfig::new(params.clone(), vec![n], replicas, 100 + i, Observable::EdgesPerVertex).with_event(event);
        let plain = estimate_tail(&base.clone().with_sampler(reference)).unwrap().rows.remove(0);
        let tilt = TiltingPotentials::new(f.clone(), g.clone()).unwrap();
        let mut is_cfg = base.with_sampler(Sampler::Tilted { potentials: tilt });
        is_cfg.master_seed = 500 + i;
        let is = estimate_tail(&is_cfg).unwrap().rows.remove(0);
        assert!(plain.p_hat > 0.05, "event too rare for plain MC: {}", plain.p_hat);
        let combined = (plain.std_err.powi(2) + is.std_err.powi(2)).sqrt();
        let z = (plain.p_hat - is.p_hat) / combined;
        if z.abs() > 3.0 {
            failures += 1;
        }
        report.push(format!("f={f:.2?} g={g:.2?}: plain {:.4} IS {:.4} z={z:.2}", plain.p_hat, is.p_hat));
    }
    assert_eq!(failures, 0, "{}", report.join("\n"));
}

/// `−(1/n) log p̂` for an event just below the typical value shrinks along
/// the grid.
#[test]
fn typical_event_rate_decreases() {
    let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
    let event = Event::at_least(Observable::EdgesPerVertex, PI / 2.0 - 0.1);
    let cfg = ExperimentConfig::new(p, vec![100, 400, 1600], 400, 3, Observable::EdgesPerVertex).with_event(event);
    let rows = estimate_tail(&cfg).unwrap().rows;
    let rates: Vec<f64> = rows.iter().map(|r| r.neg_log_rate.unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0]), "{rates:?}");
    assert!(rates[2] < 1e-3, "{rates:?}");
}

#[test]
fn always_true_event_has_zero_rate() {
    let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
    let cfg = ExperimentConfig::new(p, vec![50], 20, 1, Observable::IsolatedFraction)
        .with_event(Event::at_least(Observable::IsolatedFraction, 0.0));
    let row = &estimate_tail(&cfg).unwrap().rows[0];
    assert_eq!(row.p_hat, 1.0);
    assert_eq!(row.neg_log_rate, Some(0.0));
}
