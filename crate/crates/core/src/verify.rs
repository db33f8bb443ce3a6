//! Named verification suites shared by the command line and the tests.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::{
    Event, ExperimentConfig, Observable, Sampler, estimate_tail, euler_check, run_typical, tail_bound_check,
};
use crate::measures::{Geometry, ModelParameters};
use crate::rates::{contraction_minimum, poisson_pmf, rate_xi1, typical_isolated_fraction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Typical,
    Contraction,
    Euler,
    TailBound,
    LdpSlope,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Typical, Suite::Contraction, Suite::Euler, Suite::TailBound, Suite::LdpSlope];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Typical => "typical",
            Suite::Contraction => "contraction",
            Suite::Euler => "euler",
            Suite::TailBound => "tail-bound",
            Suite::LdpSlope => "ldp-slope",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: (value - target).abs() <= tolerance,
            value,
            target,
            tolerance,
            detail: detail.into(),
        }
    }

    fn below(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed: value < limit, value, target: limit, tolerance: 0.0, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        SuiteReport { suite, passed: checks.iter().all(|c| c.passed), checks }
    }
}

/// Knobs shared by the suites. `replicas = None` keeps each suite's default.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    pub replicas: Option<usize>,
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    match suite {
        Suite::Typical => typical(opts),
        Suite::Contraction => contraction(),
        Suite::Euler => euler(),
        Suite::TailBound => tail_bound(opts),
        Suite::LdpSlope => ldp_slope(opts),
    }
}

fn mono(c: f64) -> ModelParameters {
    ModelParameters::monochrome(2, c, Geometry::Torus).expect("valid monochrome parameters")
}

/// Two colours with unequal weights and a full kernel.
pub fn two_colour_example() -> ModelParameters {
    ModelParameters::new(2, vec![0.4, 0.6], vec![vec![1.0, 0.5], vec![0.5, 2.0]], Geometry::Torus)
        .expect("valid two-colour parameters")
}

fn typical(opts: &SuiteOptions) -> Result<SuiteReport> {
    let n = 4000;
    let replicas = opts.replicas.unwrap_or(100);
    let p = mono(1.0);
    let base = |obs| ExperimentConfig::new(p.clone(), vec![n], replicas, opts.seed, obs);
    let mut checks = Vec::new();

    let iso = &run_typical(&base(Observable::IsolatedFraction))?.rows[0];
    let target = typical_isolated_fraction(&p);
    checks.push(Check::within(
        "isolated fraction",
        iso.mean[0],
        target,
        3.0 * iso.std_err[0],
        format!("mean over {replicas} replicas at n = {n}, tolerance 3 se"),
    ));

    let epv = &run_typical(&base(Observable::EdgesPerVertex))?.rows[0];
    let target = (n as f64 - 1.0) * std::f64::consts::PI / (2.0 * n as f64);
    checks.push(Check::within("edges per vertex", epv.mean[0], target, 3.0 * epv.std_err[0], "tolerance 3 se"));

    let tv = run_typical(&base(Observable::DegreeTv))?.rows[0].pooled_tv.unwrap_or(f64::INFINITY);
    checks.push(Check::below("degree TV to Poisson(π)", tv, 0.05, "pooled degree histogram"));

    let cfg = ExperimentConfig::new(two_colour_example(), vec![n], replicas, opts.seed, Observable::NeighbourhoodTv);
    let tv2 = run_typical(&cfg)?.rows[0].pooled_tv.unwrap_or(f64::INFINITY);
    checks.push(Check::below("two-colour neighbourhood TV to μ*", tv2, 0.1, "pooled M against product-Poisson μ*"));
    Ok(SuiteReport::new(Suite::Typical, checks))
}

fn contraction() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for &y in &[0.1, 0.3, 0.5, 0.7] {
        let xi = rate_xi1(y, 1.0, 2)?;
        let r = contraction_minimum(y, 1.0, 2, 60)?;
        checks.push(Check::within(format!("min η₁ at y = {y}"), r.value, xi.value(), 1e-3, "support 60"));
        let a = xi.diagnostics.root.unwrap_or(0.0);
        let scale = (1.0 - y) / -(-a).exp_m1();
        let worst = (1..=60)
            .map(|k| (r.delta.get(k) - scale * poisson_pmf(a, k as u64)).abs())
            .fold(0.0, f64::max);
        checks.push(Check::below(
            format!("minimiser at y = {y}"),
            worst,
            1e-4,
            format!("max entrywise gap to the conditional Poisson({a:.6}) form"),
        ));
    }
    Ok(SuiteReport::new(Suite::Contraction, checks))
}

fn euler() -> Result<SuiteReport> {
    let grid = [1_000, 10_000, 100_000];
    let mut checks = Vec::new();
    for &alpha in &[-1.0, 1.0] {
        for &c in &[1.0, 2.0] {
            let t = euler_check(alpha, &mono(c), &grid)?;
            let last = t.rows.last().expect("nonempty grid");
            checks.push(Check::below(
                format!("α = {alpha}, C = {c}"),
                last.rel_error,
                0.02,
                format!("relative error at n = {}, error decreasing: {}", last.n, t.decreasing),
            ));
            checks.push(Check {
                name: format!("α = {alpha}, C = {c} decreasing"),
                passed: t.decreasing,
                value: t.rows[0].abs_error,
                target: last.abs_error,
                tolerance: 0.0,
                detail: "absolute error along the n grid".into(),
            });
        }
    }
    Ok(SuiteReport::new(Suite::Euler, checks))
}

fn tail_bound(opts: &SuiteOptions) -> Result<SuiteReport> {
    let replicas = opts.replicas.unwrap_or(10_000);
    let r = tail_bound_check(&mono(1.0), 6.0, 200, replicas, opts.seed)?;
    let checks = vec![
        Check {
            name: "empirical ≤ 10 × bound".into(),
            passed: r.empirical_within_bound,
            value: r.p_hat,
            target: r.safety * r.bound_term,
            tolerance: 0.0,
            detail: format!("{} hits in {} replicas", r.hits, r.replicas),
        },
        Check {
            name: "rule of three below bound".into(),
            passed: r.rule_of_three_below_bound,
            value: r.rule_of_three,
            target: r.bound_term,
            tolerance: 0.0,
            detail: format!("log bound term {:.2}; needs about {:.1e} replicas", r.log_bound_term, 3.0 / r.bound_term),
        },
    ];
    Ok(SuiteReport::new(Suite::TailBound, checks))
}

/// Rate estimates `−(1/n) log p̂` of `{D(0) ≥ y}` on the grid, with `ξ₁(y)`.
pub fn isolated_slope(y: f64, n_grid: &[usize], replicas: usize, seed: u64) -> Result<(Vec<f64>, f64)> {
    let cfg = ExperimentConfig::new(mono(1.0), n_grid.to_vec(), replicas, seed, Observable::IsolatedFraction)
        .with_event(Event::at_least(Observable::IsolatedFraction, y))
        .with_sampler(Sampler::IsolatedLift { y });
    let est = estimate_tail(&cfg)?;
    let rates = est.rows.iter().map(|r| r.neg_log_rate.unwrap_or(f64::NAN)).collect();
    Ok((rates, rate_xi1(y, 1.0, 2)?.value()))
}

fn ldp_slope(opts: &SuiteOptions) -> Result<SuiteReport> {
    let grid = [100, 200, 400, 600];
    let y = 0.3;
    let (rates, xi) = isolated_slope(y, &grid, opts.replicas.unwrap_or(4000), opts.seed)?;
    let last = *rates.last().expect("nonempty grid");
    let mut checks = vec![Check::within(
        "rate at n = 600 within 30% of ξ₁(0.3)",
        last,
        xi,
        0.3 * xi,
        format!("rates on n = {grid:?}: {rates:?}"),
    )];
    let toward = rates.windows(2).filter(|w| (w[1] - xi).abs() < (w[0] - xi).abs()).count();
    checks.push(Check {
        name: "moves toward ξ₁".into(),
        passed: toward == grid.len() - 1,
        value: toward as f64,
        target: (grid.len() - 1) as f64,
        tolerance: 0.0,
        detail: "consecutive grid steps that reduce the distance to ξ₁".into(),
    });
    Ok(SuiteReport::new(Suite::LdpSlope, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        assert!(run_suite(Suite::Contraction, &SuiteOptions::default()).unwrap().passed);
        assert!(run_suite(Suite::Euler, &SuiteOptions::default()).unwrap().passed);
    }
}
