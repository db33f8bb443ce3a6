use serde::Serialize;

use super::{ColourMeasure, NeighbourhoodMeasure, PairMeasure, Profile, ProfileAtom, check_probability_vector};
use crate::error::{Error, Result};
use crate::rates::{log_poisson_pmf, poisson_upper_tail};

/// The product-Poisson law `Q[ϖ, μ₁]` on (colour, profile) pairs: colour `a`
/// has probability `μ₁(a)`, and given `a` the counts `ℓ(b)` are independent
/// Poisson with mean `ϖ(a,b)/μ₁(a)`.
#[derive(Debug, Clone)]
pub struct ProductPoisson {
    k: usize,
    mu1: Vec<f64>,
    rates: Vec<f64>,
}

impl ProductPoisson {
    pub fn new(varpi: &PairMeasure, mu1: &ColourMeasure) -> Result<Self> {
        let k = mu1.k();
        if varpi.k() != k {
            return Err(Error::DimensionMismatch { expected: k, found: varpi.k() });
        }
        check_probability_vector(mu1, "μ₁")?;
        let w = mu1.to_dense();
        let m = varpi.to_matrix();
        let mut rates = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let v = m[a * k + b];
                if v == 0.0 {
                    continue;
                }
                if w[a] == 0.0 {
                    return Err(Error::MassOnEmptyColour { colour: a, mass: v });
                }
                rates[a * k + b] = v / w[a];
            }
        }
        Ok(ProductPoisson { k, mu1: w, rates })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Poisson mean of `ℓ(b)` given colour `a`.
    pub fn rate(&self, a: usize, b: usize) -> f64 {
        self.rates[a * self.k + b]
    }

    pub fn log_density(&self, atom: &ProfileAtom) -> f64 {
        let a = atom.colour;
        if a >= self.k || self.mu1[a] == 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut lp = self.mu1[a].ln();
        let mut entries = atom.profile.entries().iter().peekable();
        for b in 0..self.k {
            let count = match entries.peek() {
                Some(&&(c, n)) if c == b => {
                    entries.next();
                    n as u64
                }
                _ => 0,
            };
            lp += log_poisson_pmf(self.rate(a, b), count);
        }
        if entries.next().is_some() {
            return f64::NEG_INFINITY;
        }
        lp
    }

    pub fn density(&self, atom: &ProfileAtom) -> f64 {
        self.log_density(atom).exp()
    }

    /// Mass of profiles with some entry above `truncation`.
    pub fn truncated_mass(&self, truncation: u32) -> f64 {
        let mut total = 0.0;
        for a in 0..self.k {
            if self.mu1[a] == 0.0 {
                continue;
            }
            let log_inside: f64 = (0..self.k)
                .map(|b| (-poisson_upper_tail(self.rate(a, b), truncation as u64)).ln_1p())
                .sum();
            total += self.mu1[a] * -log_inside.exp_m1();
        }
        total
    }

    /// Explicit measure on all atoms with every entry `≤ truncation`.
    pub fn enumerate(&self, truncation: u32) -> Result<NeighbourhoodMeasure> {
        let t = truncation as usize;
        let mut pairs = Vec::new();
        for a in 0..self.k {
            if self.mu1[a] == 0.0 {
                continue;
            }
            let active: Vec<usize> = (0..self.k).filter(|&b| self.rate(a, b) > 0.0).collect();
            let tables: Vec<Vec<f64>> = active
                .iter()
                .map(|&b| (0..=t).map(|m| log_poisson_pmf(self.rate(a, b), m as u64)).collect())
                .collect();
            let size = (t + 1)
                .checked_pow(active.len() as u32)
                .filter(|&s| s <= 50_000_000)
                .ok_or_else(|| Error::Numerical(format!("profile enumeration too large at truncation {t}")))?;
            let base = self.mu1[a].ln();
            let mut digits = vec![0usize; active.len()];
            for _ in 0..size {
                let lp: f64 = base + digits.iter().zip(&tables).map(|(&m, tab)| tab[m]).sum::<f64>();
                let w = lp.exp();
                if w > 0.0 {
                    let profile = Profile::from_entries(active.iter().zip(&digits).map(|(&b, &m)| (b, m as u32)));
                    pairs.push((ProfileAtom::new(a, profile), w));
                }
                for dgt in digits.iter_mut() {
                    *dgt += 1;
                    if *dgt <= t {
                        break;
                    }
                    *dgt = 0;
                }
            }
        }
        NeighbourhoodMeasure::from_pairs(self.k, pairs)
    }

    fn max_rate(&self) -> f64 {
        self.rates.iter().cloned().fold(0.0, f64::max)
    }
}

/// A truncated `Q[ϖ, μ₁]` together with the probability it leaves out.
#[derive(Debug, Clone, Serialize)]
pub struct QMeasure {
    pub measure: NeighbourhoodMeasure,
    pub truncation: u32,
    pub truncated_mass: f64,
}

pub fn q_measure(varpi: &PairMeasure, mu1: &ColourMeasure, truncation: u32) -> Result<QMeasure> {
    let q = ProductPoisson::new(varpi, mu1)?;
    Ok(QMeasure {
        measure: q.enumerate(truncation)?,
        truncation,
        truncated_mass: q.truncated_mass(truncation),
    })
}

/// Doubles the truncation until the left-out mass is below `tol`.
pub fn q_measure_adaptive(varpi: &PairMeasure, mu1: &ColourMeasure, tol: f64) -> Result<QMeasure> {
    let q = ProductPoisson::new(varpi, mu1)?;
    let mut t = ((q.max_rate() + 4.0 * q.max_rate().sqrt()).ceil() as u32).max(4);
    while q.truncated_mass(t) >= tol {
        t = t.checked_mul(2).ok_or_else(|| Error::Numerical("truncation overflow".into()))?;
    }
    Ok(QMeasure { measure: q.enumerate(t)?, truncation: t, truncated_mass: q.truncated_mass(t) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::profile_marginals;
    use crate::rates::poisson_pmf;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn zero_pair_measure_gives_point_masses() {
        let mu1 = ColourMeasure::from_weights(vec![0.3, 0.7]).unwrap();
        let varpi = PairMeasure::from_matrix(2, &[0.0; 4]).unwrap();
        let q = q_measure(&varpi, &mu1, 5).unwrap();
        assert_eq!(q.measure.len(), 2);
        assert_eq!(q.measure.get(&ProfileAtom::new(0, Profile::zero())), 0.3);
        assert_eq!(q.measure.get(&ProfileAtom::new(1, Profile::zero())), 0.7);
        assert_eq!(q.truncated_mass, 0.0);
    }

    #[test]
    fn monochrome_is_poisson() {
        let mu1 = ColourMeasure::from_weights(vec![1.0]).unwrap();
        let varpi = PairMeasure::from_matrix(1, &[PI]).unwrap();
        let q = q_measure_adaptive(&varpi, &mu1, 1e-12).unwrap();
        assert!(q.truncated_mass < 1e-12);
        for l in 0..20u32 {
            let expect = (-PI).exp() * PI.powi(l as i32) / (1..=l).map(f64::from).product::<f64>();
            let got = q.measure.get(&ProfileAtom::new(0, Profile::from_dense(&[l])));
            assert_abs_diff_eq!(got, expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_colour_factorises() {
        let mu1 = ColourMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        let varpi = PairMeasure::from_matrix(2, &[0.2, 0.3, 0.3, 0.1]).unwrap();
        let q = q_measure(&varpi, &mu1, 12).unwrap();
        for l0 in 0..6u32 {
            for l1 in 0..6u32 {
                let got = q.measure.get(&ProfileAtom::new(0, Profile::from_dense(&[l0, l1])));
                let expect = 0.5 * poisson_pmf(0.4, l0 as u64) * poisson_pmf(0.6, l1 as u64);
                assert_abs_diff_eq!(got, expect, epsilon = 1e-16);
            }
        }
    }

    #[test]
    fn mean_identity_and_mass_conservation() {
        let mu1 = ColourMeasure::from_weights(vec![0.2, 0.5, 0.3]).unwrap();
        let varpi = PairMeasure::from_matrix(3, &[0.1, 0.4, 0.0, 0.4, 0.9, 0.2, 0.0, 0.2, 0.6]).unwrap();
        let q = q_measure_adaptive(&varpi, &mu1, 1e-12).unwrap();
        let (m1, h2) = profile_marginals(&q.measure).unwrap();
        for (x, y) in m1.to_dense().iter().zip(mu1.to_dense()) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-11);
        }
        for (x, y) in h2.to_matrix().iter().zip(varpi.to_matrix()) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(q.measure.total_mass() + q.truncated_mass, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn mass_on_empty_colour_is_an_error() {
        let mu1 = ColourMeasure::from_weights(vec![1.0, 0.0]).unwrap();
        let varpi = PairMeasure::from_matrix(2, &[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(q_measure(&varpi, &mu1, 4), Err(Error::MassOnEmptyColour { colour: 1, .. })));
    }
}
