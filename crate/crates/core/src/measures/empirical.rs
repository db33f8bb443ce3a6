use std::collections::BTreeMap;

use serde::Serialize;

use super::{ColourMeasure, DegreeDistribution, NeighbourhoodMeasure, PairMeasure, Profile, ProfileAtom};
use crate::error::Result;
use crate::graphgen::GraphSample;

/// Empirical colour, pair and neighbourhood measures and the degree
/// distribution of one sample, together with the integer counts behind them.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalMeasures {
    pub n: usize,
    pub edge_count: usize,
    /// `L¹`
    pub colour: ColourMeasure,
    /// `L²`, total mass `2|E|/n`
    pub pair: PairMeasure,
    /// `M`
    pub neighbourhood: NeighbourhoodMeasure,
    /// `D`
    pub degree: DegreeDistribution,
    #[serde(skip)]
    pub colour_counts: Vec<u64>,
    /// Ordered colour-pair endpoint counts, row-major `k×k`; entry `(a,b)`
    /// counts ordered adjacent pairs `(u,v)` with colours `(a,b)`.
    #[serde(skip)]
    pub pair_counts: Vec<u64>,
    #[serde(skip)]
    pub profile_counts: BTreeMap<ProfileAtom, u64>,
}

impl EmpiricalMeasures {
    /// `n·ℌ₂(M)` computed in integers, laid out like [`EmpiricalMeasures::pair_counts`].
    pub fn h2_counts(&self) -> Vec<u64> {
        let k = self.colour.k();
        let mut out = vec![0u64; k * k];
        for (atom, &count) in &self.profile_counts {
            for &(b, c) in atom.profile.entries() {
                out[b * k + atom.colour] += c as u64 * count;
            }
        }
        out
    }

    /// `ℌ₂(M) = L²` and `∥L²∥·n = 2|E|`, both checked in integer arithmetic.
    pub fn is_exactly_consistent(&self) -> bool {
        let total: u64 = self.pair_counts.iter().sum();
        total == 2 * self.edge_count as u64 && self.h2_counts() == self.pair_counts
    }

    pub fn isolated_fraction(&self) -> f64 {
        self.degree.get(0)
    }

    pub fn edges_per_vertex(&self) -> f64 {
        self.edge_count as f64 / self.n as f64
    }
}

/// Empirical measures of a sample. Fails with a message naming the offending
/// vertex or edge if the sample is structurally malformed.
pub fn empirical_measures(sample: &GraphSample) -> Result<EmpiricalMeasures> {
    sample.validate_structure()?;
    let n = sample.n;
    let k = sample.k;
    let mut colour_counts = vec![0u64; k];
    for &c in &sample.colours {
        colour_counts[c] += 1;
    }
    let mut pair_counts = vec![0u64; k * k];
    let mut nbr: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
    for &(i, j) in &sample.edges {
        let (a, b) = (sample.colours[i], sample.colours[j]);
        pair_counts[a * k + b] += 1;
        pair_counts[b * k + a] += 1;
        nbr[i].push((b, 1));
        nbr[j].push((a, 1));
    }
    let mut profile_counts: BTreeMap<ProfileAtom, u64> = BTreeMap::new();
    let mut degree_counts: Vec<u64> = vec![0];
    for (v, entries) in nbr.into_iter().enumerate() {
        let deg = entries.len();
        if degree_counts.len() <= deg {
            degree_counts.resize(deg + 1, 0);
        }
        degree_counts[deg] += 1;
        let atom = ProfileAtom::new(sample.colours[v], Profile::from_entries(entries));
        *profile_counts.entry(atom).or_insert(0) += 1;
    }
    let nf = n as f64;
    let colour = ColourMeasure::from_weights(colour_counts.iter().map(|&c| c as f64 / nf).collect())?;
    let pair = PairMeasure::from_matrix(k, &pair_counts.iter().map(|&c| c as f64 / nf).collect::<Vec<_>>())?;
    let neighbourhood =
        NeighbourhoodMeasure::from_pairs(k, profile_counts.iter().map(|(a, &c)| (a.clone(), c as f64 / nf)))?;
    let degree = DegreeDistribution::from_counts(&degree_counts, n as u64);
    Ok(EmpiricalMeasures {
        n,
        edge_count: sample.edges.len(),
        colour,
        pair,
        neighbourhood,
        degree,
        colour_counts,
        pair_counts,
        profile_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{EdgeLaw, GraphSample};
    use crate::measures::{Geometry, profile_marginals};

    fn bare(n: usize, k: usize, colours: Vec<usize>, edges: Vec<(usize, usize)>) -> GraphSample {
        GraphSample {
            n,
            d: 2,
            k,
            geometry: Geometry::Torus,
            seed: 0,
            colours,
            points: Vec::new(),
            edges,
            radii: vec![0.1; k * k],
            edge_law: EdgeLaw::Bernoulli,
        }
    }

    #[test]
    fn single_edge_total_mass() {
        let m = empirical_measures(&bare(2, 1, vec![0, 0], vec![(0, 1)])).unwrap();
        assert_eq!(m.pair.total_mass(), 1.0);
        assert_eq!(m.pair.get(&(0, 0)), 1.0);
        assert!(m.is_exactly_consistent());
    }

    #[test]
    fn empty_edge_set() {
        let m = empirical_measures(&bare(3, 2, vec![0, 1, 1], vec![])).unwrap();
        assert_eq!(m.pair.total_mass(), 0.0);
        assert_eq!(m.degree.get(0), 1.0);
        assert!(m.neighbourhood.atoms().iter().all(|a| a.profile.is_zero()));
    }

    #[test]
    fn path_of_three_by_hand() {
        // colours (a, b, a) = (0, 1, 0), edges 0-1, 1-2
        let m = empirical_measures(&bare(3, 2, vec![0, 1, 0], vec![(0, 1), (1, 2)])).unwrap();
        let a_with_one_b = ProfileAtom::new(0, Profile::from_dense(&[0, 1]));
        let b_with_two_a = ProfileAtom::new(1, Profile::from_dense(&[2, 0]));
        assert_eq!(m.neighbourhood.get(&a_with_one_b), 2.0 / 3.0);
        assert_eq!(m.neighbourhood.get(&b_with_two_a), 1.0 / 3.0);
        assert_eq!(m.neighbourhood.len(), 2);
        let (mu1, h2) = profile_marginals(&m.neighbourhood).unwrap();
        assert_eq!(mu1.to_dense(), vec![2.0 / 3.0, 1.0 / 3.0]);
        // L²(0,1) = L²(1,0) = 2/3, no monochrome edges
        assert_eq!(m.pair.to_matrix(), vec![0.0, 2.0 / 3.0, 2.0 / 3.0, 0.0]);
        for (x, y) in h2.to_matrix().iter().zip(m.pair.to_matrix()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(m.is_exactly_consistent());
        assert_eq!(m.degree.weights(), &[0.0, 2.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn malformed_samples_are_named() {
        let err = empirical_measures(&bare(3, 1, vec![0; 3], vec![(0, 0)])).unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
        let err = empirical_measures(&bare(3, 1, vec![0; 3], vec![(0, 1), (1, 0)])).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let err = empirical_measures(&bare(3, 1, vec![0; 3], vec![(0, 7)])).unwrap_err();
        assert!(err.to_string().contains('7'), "{err}");
    }
}
