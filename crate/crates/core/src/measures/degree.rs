use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rates::poisson_pmf;

/// Probability weights `δ(m)` on degrees `0..=K_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    weights: Vec<f64>,
}

/// Maximum allowed deviation of the total mass from 1.
pub const DEGREE_MASS_TOL: f64 = 1e-12;

impl DegreeDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("degree distribution has empty support".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("degree weights must be finite and nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > DEGREE_MASS_TOL {
            return Err(Error::InvalidMeasure(format!("degree distribution sums to {s}")));
        }
        let mut weights = weights;
        while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
            weights.pop();
        }
        Ok(DegreeDistribution { weights })
    }

    pub fn point_mass(m: usize) -> Self {
        let mut weights = vec![0.0; m + 1];
        weights[m] = 1.0;
        DegreeDistribution { weights }
    }

    /// Poisson(λ) truncated where the upper tail drops below `tail_tol`.
    ///
    /// The weights are not renormalised; the dropped tail is at most `tail_tol`.
    pub fn poisson(lambda: f64, tail_tol: f64) -> Result<Self> {
        Self::poisson_mixture(&[1.0], &[lambda], tail_tol)
    }

    /// `Σ_i w_i Poisson(λ_i)`, truncated as in [`DegreeDistribution::poisson`].
    pub fn poisson_mixture(mix: &[f64], lambdas: &[f64], tail_tol: f64) -> Result<Self> {
        if mix.len() != lambdas.len() || lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidMeasure("bad Poisson mixture".into()));
        }
        let lmax = lambdas.iter().cloned().fold(0.0, f64::max);
        let hard_cap = (lmax + 40.0 * lmax.sqrt() + 60.0).ceil() as usize;
        let pmf: Vec<f64> = (0..=hard_cap)
            .map(|m| mix.iter().zip(lambdas).map(|(w, &l)| w * poisson_pmf(l, m as u64)).sum())
            .collect();
        let mut tail = 0.0;
        let mut cut = hard_cap;
        while cut > 0 && tail + pmf[cut] < tail_tol {
            tail += pmf[cut];
            cut -= 1;
        }
        let weights = pmf[..=cut].to_vec();
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > DEGREE_MASS_TOL.max(2.0 * tail_tol) {
            return Err(Error::Numerical(format!("truncated Poisson mixture has mass {s}")));
        }
        Ok(DegreeDistribution { weights })
    }

    pub(crate) fn from_counts(counts: &[u64], n: u64) -> Self {
        DegreeDistribution { weights: counts.iter().map(|&c| c as f64 / n as f64).collect() }
    }

    pub fn get(&self, m: usize) -> f64 {
        self.weights.get(m).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_degree(&self) -> usize {
        self.weights.len() - 1
    }

    /// `⟨δ⟩ = Σ m δ(m)`.
    pub fn mean(&self) -> f64 {
        self.weights.iter().enumerate().map(|(m, w)| m as f64 * w).sum()
    }

    pub fn total_variation(&self, other: &DegreeDistribution) -> f64 {
        let len = self.weights.len().max(other.weights.len());
        0.5 * (0..len).map(|m| (self.get(m) - other.get(m)).abs()).sum::<f64>()
    }
}

impl Serialize for DegreeDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.weights.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DegreeDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = Vec::<f64>::deserialize(d)?;
        DegreeDistribution::new(w).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn poisson_truncation_keeps_tail_small() {
        let d = DegreeDistribution::poisson(PI, 1e-13).unwrap();
        let s: f64 = d.weights().iter().sum();
        assert!((1.0 - s) < 1e-13);
        assert_abs_diff_eq!(d.mean(), PI, epsilon = 1e-10);
        assert!(d.max_degree() < 40);
    }

    #[test]
    fn validation() {
        assert!(DegreeDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(DegreeDistribution::new(vec![]).is_err());
        let d = DegreeDistribution::new(vec![0.25, 0.75, 0.0]).unwrap();
        assert_eq!(d.max_degree(), 1);
        assert_eq!(DegreeDistribution::point_mass(0).mean(), 0.0);
    }
}
