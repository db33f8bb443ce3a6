//! Replica harness: typical-behaviour statistics, tail estimates with
//! optional importance sampling, and the Euler and tightness checks.

mod isolated;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::{
    GraphSample, TiltingPotentials, connection_probabilities, sample_bernoulli, sample_cgrg, sample_tilted,
};
use crate::measures::{
    EmpiricalMeasures, Geometry, ModelParameters, NeighbourhoodMeasure, ProfileAtom, empirical_measures,
    total_variation,
};
use crate::rates::typical_measures;

pub use isolated::IsolatedLift;
pub use stats::{MeanSe, WeightedMean, replica_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    IsolatedFraction,
    EdgesPerVertex,
    /// Total variation between the degree histogram and `δ*`.
    DegreeTv,
    ColourMeasure,
    PairMeasure,
    /// Total variation between `M` and `μ*`.
    NeighbourhoodTv,
}

impl Observable {
    fn is_scalar_event(self) -> bool {
        matches!(self, Observable::IsolatedFraction | Observable::EdgesPerVertex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    AtLeast,
    AtMost,
}

/// `{observable ≥ threshold}` or `{observable ≤ threshold}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub observable: Observable,
    pub threshold: f64,
    #[serde(default)]
    pub direction: Direction,
}

impl Event {
    pub fn at_least(observable: Observable, threshold: f64) -> Self {
        Event { observable, threshold, direction: Direction::AtLeast }
    }

    pub fn holds(&self, m: &EmpiricalMeasures) -> bool {
        let v = scalar(self.observable, m);
        match self.direction {
            Direction::AtLeast => v >= self.threshold,
            Direction::AtMost => v <= self.threshold,
        }
    }
}

fn scalar(obs: Observable, m: &EmpiricalMeasures) -> f64 {
    match obs {
        Observable::IsolatedFraction => m.isolated_fraction(),
        Observable::EdgesPerVertex => m.edges_per_vertex(),
        _ => f64::NAN,
    }
}

/// Law the replicas are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    /// The geometric null law.
    Null,
    /// Independent edges with probability `F(r_n)`.
    Bernoulli,
    /// The tilted law with importance weights `dP/dP̃`, against the
    /// geometric law when `g ≡ 0` and the independent-edge law otherwise.
    Tilted { potentials: TiltingPotentials },
    /// Isolated-vertex lift targeting isolated fraction `y`, weights against
    /// the independent-edge law. Single colour only.
    IsolatedLift { y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParameters,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub master_seed: u64,
    pub observable: Observable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Event>,
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
}

fn default_sampler() -> Sampler {
    Sampler::Null
}

impl ExperimentConfig {
    pub fn new(params: ModelParameters, n_grid: Vec<usize>, replicas: usize, master_seed: u64, observable: Observable) -> Self {
        ExperimentConfig { params, n_grid, replicas, master_seed, observable, event: None, sampler: Sampler::Null }
    }

    pub fn with_event(mut self, event: Event) -> Self {
        self.event = Some(event);
        self
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.replicas == 0 {
            return bad("replicas must be at least 1");
        }
        if self.n_grid.is_empty() {
            return bad("n_grid is empty");
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be positive and strictly increasing");
        }
        if let Some(e) = &self.event {
            if !e.observable.is_scalar_event() {
                return bad("events are defined for isolated_fraction and edges_per_vertex only");
            }
        }
        match &self.sampler {
            Sampler::Tilted { potentials } if potentials.k() != self.params.k() => {
                return bad("tilt dimension differs from the colour alphabet");
            }
            Sampler::IsolatedLift { y } if self.params.k() != 1 || !(0.0..1.0).contains(y) => {
                return bad("the isolated lift needs one colour and y in [0,1)");
            }
            _ => {}
        }
        Ok(())
    }

    /// One sample and its `log(dP/dP̃)`, zero for untilted samplers.
    pub fn draw(&self, n: usize, seed: u64) -> Result<(GraphSample, f64)> {
        match &self.sampler {
            Sampler::Null => Ok((sample_cgrg(n, &self.params, seed)?, 0.0)),
            Sampler::Bernoulli => Ok((sample_bernoulli(n, &self.params, seed)?, 0.0)),
            Sampler::Tilted { potentials } => sample_tilted(n, &self.params, potentials, seed),
            Sampler::IsolatedLift { y } => IsolatedLift::new(&self.params, n, *y)?.sample(seed),
        }
    }

    fn is_weighted(&self) -> bool {
        matches!(self.sampler, Sampler::Tilted { .. } | Sampler::IsolatedLift { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicaRecord {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub edges: usize,
    pub isolated_fraction: f64,
    pub edges_per_vertex: f64,
    pub log_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypicalRow {
    pub n: usize,
    pub replicas: usize,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    /// For the TV observables: distance between the histogram pooled over
    /// all replicas and the typical law.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled_tv: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypicalSummary {
    pub observable: Observable,
    pub rows: Vec<TypicalRow>,
    #[serde(skip)]
    pub records: Vec<ReplicaRecord>,
}

struct ReplicaOut {
    record: ReplicaRecord,
    values: Vec<f64>,
    measures: EmpiricalMeasures,
}

fn run_replicas(cfg: &ExperimentConfig, n: usize) -> Result<Vec<ReplicaOut>> {
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(cfg.master_seed, n, r);
            let (sample, log_weight) = cfg.draw(n, seed)?;
            let m = empirical_measures(&sample)?;
            let hit = cfg.event.map(|e| e.holds(&m));
            let record = ReplicaRecord {
                n,
                replica: r,
                seed,
                edges: m.edge_count,
                isolated_fraction: m.isolated_fraction(),
                edges_per_vertex: m.edges_per_vertex(),
                log_weight,
                hit,
            };
            Ok(ReplicaOut { record, values: Vec::new(), measures: m })
        })
        .collect()
}

/// Per-`n` means and standard errors of the observable under the null law.
pub fn run_typical(cfg: &ExperimentConfig) -> Result<TypicalSummary> {
    cfg.validate()?;
    if cfg.event.is_some() {
        return Err(Error::InvalidConfig("run_typical takes no event; use estimate_tail".into()));
    }
    let typical = match cfg.observable {
        Observable::DegreeTv | Observable::NeighbourhoodTv => Some(typical_measures(&cfg.params, None)?),
        _ => None,
    };
    let k = cfg.params.k();
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    let mut records = Vec::new();
    for &n in &cfg.n_grid {
        let mut outs = run_replicas(cfg, n)?;
        for o in outs.iter_mut() {
            let m = &o.measures;
            o.values = match cfg.observable {
                Observable::IsolatedFraction => vec![m.isolated_fraction()],
                Observable::EdgesPerVertex => vec![m.edges_per_vertex()],
                Observable::DegreeTv => vec![m.degree.total_variation(&typical.as_ref().unwrap().delta)],
                Observable::NeighbourhoodTv => {
                    vec![total_variation(&m.neighbourhood, &typical.as_ref().unwrap().mu.measure)?]
                }
                Observable::ColourMeasure => m.colour.to_dense(),
                Observable::PairMeasure => m.pair.to_matrix(),
            };
        }
        let width = outs.first().map_or(0, |o| o.values.len());
        let mut acc = vec![MeanSe::default(); width];
        for o in &outs {
            for (a, &v) in acc.iter_mut().zip(&o.values) {
                a.push(v);
            }
        }
        let pooled_tv = match cfg.observable {
            Observable::DegreeTv => {
                let mut counts: Vec<u64> = Vec::new();
                for o in &outs {
                    for (deg, &w) in o.measures.degree.weights().iter().enumerate() {
                        if counts.len() <= deg {
                            counts.resize(deg + 1, 0);
                        }
                        counts[deg] += (w * n as f64).round() as u64;
                    }
                }
                let total = (n * cfg.replicas) as f64;
                let pooled = crate::measures::DegreeDistribution::new(counts.iter().map(|&c| c as f64 / total).collect())?;
                Some(pooled.total_variation(&typical.as_ref().unwrap().delta))
            }
            Observable::NeighbourhoodTv => {
                let mut pooled: std::collections::BTreeMap<ProfileAtom, u64> = Default::default();
                for o in &outs {
                    for (atom, &c) in &o.measures.profile_counts {
                        *pooled.entry(atom.clone()).or_insert(0) += c;
                    }
                }
                let total = (n * cfg.replicas) as f64;
                let m = NeighbourhoodMeasure::from_pairs(k, pooled.into_iter().map(|(a, c)| (a, c as f64 / total)))?;
                Some(total_variation(&m, &typical.as_ref().unwrap().mu.measure)?)
            }
            _ => None,
        };
        rows.push(TypicalRow {
            n,
            replicas: cfg.replicas,
            mean: acc.iter().map(MeanSe::mean).collect(),
            std_err: acc.iter().map(MeanSe::std_err).collect(),
            pooled_tv,
        });
        records.extend(outs.into_iter().map(|o| o.record));
    }
    Ok(TypicalSummary { observable: cfg.observable, rows, records })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub n: usize,
    pub replicas: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub std_err: f64,
    /// `−(1/n) log p̂`; absent when no replica hit the event.
    pub neg_log_rate: Option<f64>,
    /// Delta-method standard error of `neg_log_rate`.
    pub rate_std_err: Option<f64>,
    /// Effective sample size of the hit weights; importance sampling only.
    pub effective_sample_size: Option<f64>,
    /// Rule-of-three 95% upper bound on `p`, reported when `hits = 0`.
    pub upper_bound: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub event: Event,
    pub rows: Vec<TailRow>,
    #[serde(skip)]
    pub records: Vec<ReplicaRecord>,
}

/// Probability of the configured event at every `n`, by plain or
/// importance-sampled Monte Carlo depending on the sampler.
pub fn estimate_tail(cfg: &ExperimentConfig) -> Result<TailEstimate> {
    cfg.validate()?;
    let event = cfg.event.ok_or_else(|| Error::InvalidConfig("estimate_tail needs an event".into()))?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n in &cfg.n_grid {
        let outs = run_replicas(cfg, n)?;
        let r = cfg.replicas;
        let hits = outs.iter().filter(|o| o.record.hit == Some(true)).count();
        // with every weight exactly one the weighted estimator is the hit
        // fraction, so report it through the plain formulas bit for bit
        let weighted = cfg.is_weighted() && outs.iter().any(|o| o.record.log_weight != 0.0);
        let row = if weighted {
            let mut wm = WeightedMean::new(r);
            for o in &outs {
                if o.record.hit == Some(true) {
                    wm.push_log(o.record.log_weight);
                }
            }
            let p = wm.mean();
            let se = wm.std_err();
            let nlr = (hits > 0).then(|| -wm.log_mean() / n as f64);
            TailRow {
                n,
                replicas: r,
                hits,
                p_hat: p,
                std_err: se,
                neg_log_rate: nlr,
                rate_std_err: (hits > 0).then(|| wm.relative_std_err() / n as f64),
                effective_sample_size: Some(wm.effective_sample_size()),
                upper_bound: None,
                flagged: hits == 0,
            }
        } else {
            let p = hits as f64 / r as f64;
            let se = (p * (1.0 - p) / r as f64).sqrt();
            TailRow {
                n,
                replicas: r,
                hits,
                p_hat: p,
                std_err: se,
                neg_log_rate: (hits > 0).then(|| (-p.ln() / n as f64).max(0.0)),
                rate_std_err: (hits > 0).then(|| se / p / n as f64),
                effective_sample_size: None,
                upper_bound: (hits == 0).then(|| 3.0 / r as f64),
                flagged: hits == 0,
            }
        };
        rows.push(row);
        records.extend(outs.into_iter().map(|o| o.record));
    }
    Ok(TailEstimate { event, rows, records })
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerRow {
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub value: f64,
    pub limit: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerTable {
    pub alpha: f64,
    pub rows: Vec<EulerRow>,
    /// Whether the error shrinks along the grid for every colour pair.
    pub decreasing: bool,
}

/// `[1 + αF(r_n(a,b))]^n` against its limit `e^{αρC(a,b)}`.
pub fn euler_check(alpha: f64, params: &ModelParameters, n_grid: &[usize]) -> Result<EulerTable> {
    if params.geometry() != Geometry::Torus {
        return Err(Error::InvalidConfig("euler_check needs the torus".into()));
    }
    let k = params.k();
    let mut rows = Vec::new();
    for &n in n_grid {
        let probs = connection_probabilities(params, n)?;
        for a in 0..k {
            for b in a..k {
                let f = probs[a * k + b];
                let value = (n as f64 * (alpha * f).ln_1p()).exp();
                let limit = (alpha * params.rho() * params.kernel(a, b)).exp();
                let abs_error = (value - limit).abs();
                rows.push(EulerRow { n, a, b, value, limit, abs_error, rel_error: abs_error / limit });
            }
        }
    }
    let pairs = k * (k + 1) / 2;
    let decreasing = (pairs..rows.len()).all(|i| rows[i].abs_error <= rows[i - pairs].abs_error);
    Ok(EulerTable { alpha, rows, decreasing })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailBoundReport {
    pub n: usize,
    pub l: f64,
    pub replicas: usize,
    pub hits: usize,
    pub p_hat: f64,
    /// `e^{−n(l − ρc(e − 1))}` with `c = max C`.
    pub bound_term: f64,
    pub log_bound_term: f64,
    pub safety: f64,
    pub rule_of_three: f64,
    /// `p̂ ≤ safety·bound`, vacuous when nothing was hit.
    pub empirical_within_bound: bool,
    /// `3/replicas < bound_term`.
    pub rule_of_three_below_bound: bool,
}

/// Empirical `P{|E| ≥ nl}` under the null law against the dominant term of
/// the exponential tightness bound.
pub fn tail_bound_check(params: &ModelParameters, l: f64, n: usize, replicas: usize, master_seed: u64) -> Result<TailBoundReport> {
    if replicas == 0 {
        return Err(Error::InvalidConfig("replicas must be at least 1".into()));
    }
    let cfg = ExperimentConfig::new(params.clone(), vec![n], replicas, master_seed, Observable::EdgesPerVertex)
        .with_event(Event::at_least(Observable::EdgesPerVertex, l));
    let est = estimate_tail(&cfg)?;
    let row = &est.rows[0];
    let log_bound_term = -(n as f64) * (l - params.rho() * params.kernel_max() * (std::f64::consts::E - 1.0));
    let bound_term = log_bound_term.exp();
    let safety = 10.0;
    let rule_of_three = 3.0 / replicas as f64;
    Ok(TailBoundReport {
        n,
        l,
        replicas,
        hits: row.hits,
        p_hat: row.p_hat,
        bound_term,
        log_bound_term,
        safety,
        rule_of_three,
        empirical_within_bound: row.hits == 0 || row.p_hat <= safety * bound_term,
        rule_of_three_below_bound: rule_of_three < bound_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono() -> ModelParameters {
        ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap()
    }

    #[test]
    fn config_validation() {
        let c = ExperimentConfig::new(mono(), vec![10, 10], 5, 0, Observable::IsolatedFraction);
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(mono(), vec![10, 20], 0, 0, Observable::IsolatedFraction);
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new(mono(), vec![10, 20], 3, 0, Observable::IsolatedFraction);
        c.validate().unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), c);
    }

    #[test]
    fn single_vertex_is_isolated() {
        let c = ExperimentConfig::new(mono().with_geometry(Geometry::Cube), vec![1], 4, 0, Observable::IsolatedFraction);
        let s = run_typical(&c).unwrap();
        assert_eq!(s.rows[0].mean, vec![1.0]);
        assert_eq!(s.rows[0].std_err, vec![0.0]);
    }

    #[test]
    fn sure_event() {
        let c = ExperimentConfig::new(mono(), vec![50], 20, 1, Observable::IsolatedFraction)
            .with_event(Event::at_least(Observable::IsolatedFraction, 0.0));
        let t = estimate_tail(&c).unwrap();
        assert_eq!(t.rows[0].p_hat, 1.0);
        assert_eq!(t.rows[0].neg_log_rate, Some(0.0));
    }

    #[test]
    fn impossible_event_is_flagged() {
        let c = ExperimentConfig::new(mono(), vec![50], 20, 1, Observable::IsolatedFraction)
            .with_event(Event::at_least(Observable::EdgesPerVertex, 1e6));
        let t = estimate_tail(&c).unwrap();
        assert!(t.rows[0].flagged);
        assert_eq!(t.rows[0].neg_log_rate, None);
        assert_eq!(t.rows[0].upper_bound, Some(0.15));
    }

    #[test]
    fn euler_identity_and_zero_replicas() {
        let t = euler_check(0.0, &mono(), &[10, 100]).unwrap();
        assert!(t.rows.iter().all(|r| r.value == 1.0 && r.limit == 1.0));
        assert!(tail_bound_check(&mono(), 6.0, 200, 0, 0).is_err());
    }
}
