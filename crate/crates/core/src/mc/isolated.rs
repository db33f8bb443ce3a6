use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graphgen::{EdgeLaw, GraphSample, connection_probabilities, connection_radii, skip_sample, triangular_pair};
use crate::measures::ModelParameters;
use crate::rates::isolated_root;

/// Importance sampler for `{D(0) ≥ y}` in the single-colour model.
///
/// Each vertex is marked dead with probability `s` and never connects; live
/// pairs connect independently with probability `a/((1 − s)n)`, where `a` is
/// the isolated-vertex root at `y`. Then the isolated fraction concentrates
/// at `y`. The mark is summed out of the weight, which is taken against the
/// independent-edge law with probability `F(r_n)`.
#[derive(Debug, Clone)]
pub struct IsolatedLift {
    params: ModelParameters,
    n: usize,
    pub y: f64,
    pub a: f64,
    pub s: f64,
    pub f: f64,
    pub f_tilde: f64,
}

impl IsolatedLift {
    pub fn new(params: &ModelParameters, n: usize, y: f64) -> Result<Self> {
        if params.k() != 1 {
            return Err(Error::InvalidConfig("the isolated lift needs a single colour".into()));
        }
        if !(0.0..1.0).contains(&y) {
            return Err(Error::OutOfRange(format!("y must lie in [0,1), got {y}")));
        }
        let c = params.kernel(0, 0);
        let a = isolated_root(y, c, params.d())?.x;
        let s = ((y - (-a).exp()) / -(-a).exp_m1()).max(0.0);
        let f = connection_probabilities(params, n)?[0];
        let f_tilde = (a / ((1.0 - s) * n as f64)).min(1.0);
        Ok(IsolatedLift { params: params.clone(), n, y, a, s, f, f_tilde })
    }

    pub fn sample(&self, seed: u64) -> Result<(GraphSample, f64)> {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let live: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() >= self.s).collect();
        let mut edges: Vec<(usize, usize)> = skip_sample(&mut rng, live.len() * live.len().saturating_sub(1) / 2, self.f_tilde)
            .into_iter()
            .map(|t| {
                let (i, j) = triangular_pair(t, live.len());
                (live[i], live[j])
            })
            .collect();
        edges.sort_unstable();
        let mut degree = vec![0u32; n];
        for &(i, j) in &edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let isolated = degree.iter().filter(|&&x| x == 0).count();
        let log_weight = self.log_reference(edges.len()) - self.log_proposal(edges.len(), isolated);
        let sample = GraphSample {
            n,
            d: self.params.d(),
            k: 1,
            geometry: self.params.geometry(),
            seed,
            colours: vec![0; n],
            points: Vec::new(),
            edges,
            radii: connection_radii(&self.params, n)?,
            edge_law: EdgeLaw::Bernoulli,
        };
        Ok((sample, log_weight))
    }

    fn pairs(m: usize) -> f64 {
        (m as f64) * (m as f64 - 1.0).max(0.0) / 2.0
    }

    fn log_reference(&self, edges: usize) -> f64 {
        let e = edges as f64;
        xlog(e, self.f) + (Self::pairs(self.n) - e) * (-self.f).ln_1p()
    }

    /// Log-probability of the graph under the lift, summing over which
    /// isolated vertices were dead.
    fn log_proposal(&self, edges: usize, isolated: usize) -> f64 {
        let e = edges as f64;
        let top = if self.s > 0.0 { isolated } else { 0 };
        let terms: Vec<f64> = (0..=top)
            .filter_map(|m| {
                let absent = Self::pairs(self.n - m) - e;
                if absent < 0.0 {
                    return None;
                }
                let choose = ln_gamma(isolated as f64 + 1.0) - ln_gamma(m as f64 + 1.0) - ln_gamma((isolated - m) as f64 + 1.0);
                let t = choose
                    + xlog(m as f64, self.s)
                    + ((self.n - m) as f64) * (-self.s).ln_1p()
                    + xlog(e, self.f_tilde)
                    + absent * (-self.f_tilde).ln_1p();
                t.is_finite().then_some(t)
            })
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }
}

fn xlog(x: f64, p: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * p.ln() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Geometry;

    #[test]
    fn lift_hits_target_and_weights_are_finite() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        let lift = IsolatedLift::new(&p, 400, 0.3).unwrap();
        assert!(lift.s > 0.0 && lift.s < 0.3);
        let mut frac = 0.0;
        for seed in 0..50 {
            let (g, w) = lift.sample(seed).unwrap();
            assert!(w.is_finite());
            let m = crate::measures::empirical_measures(&g).unwrap();
            frac += m.isolated_fraction() / 50.0;
        }
        assert!((frac - 0.3).abs() < 0.02, "{frac}");
    }
}
