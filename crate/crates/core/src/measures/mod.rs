//! Finite measures on colours, colour pairs and (colour, profile) atoms.
//!
//! Everything here is exact arithmetic on finite supports: empirical measures
//! of a sample, relative entropy of unnormalised measures, the pair-measure
//! functional `ℌ(ϖ ∥ ω)`, the product-Poisson measure `Q[ϖ, μ₁]` and the
//! consistency relation between a pair measure and a neighbourhood measure.

mod degree;
mod empirical;
mod poisson_product;
mod profile;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Value, json};

use crate::error::{Error, Result};
use crate::rates::ball_volume;

pub use degree::DegreeDistribution;
pub use empirical::{EmpiricalMeasures, empirical_measures};
pub use poisson_product::{ProductPoisson, QMeasure, q_measure, q_measure_adaptive};
pub use profile::{Profile, ProfileAtom};

/// Tolerance used for probability-vector and symmetry checks.
pub const PARAM_TOL: f64 = 1e-12;

/// Default absolute per-entry tolerance for [`check_consistency`].
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    #[default]
    Torus,
    Cube,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Torus => f.write_str("torus"),
            Geometry::Cube => f.write_str("cube"),
        }
    }
}

/// Alphabet size, dimension, colour law `ν`, kernel `C` and geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    k: usize,
    d: usize,
    nu: Vec<f64>,
    kernel: Vec<f64>,
    geometry: Geometry,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelParametersRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    d: usize,
    nu: Vec<f64>,
    kernel: Vec<Vec<f64>>,
    #[serde(default)]
    geometry: Geometry,
}

impl ModelParameters {
    pub fn new(d: usize, nu: Vec<f64>, kernel: Vec<Vec<f64>>, geometry: Geometry) -> Result<Self> {
        let k = nu.len();
        if k == 0 {
            return Err(Error::InvalidParameters("colour alphabet is empty".into()));
        }
        if d == 0 {
            return Err(Error::InvalidParameters("dimension must be at least 1".into()));
        }
        if nu.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidParameters(format!("ν has a negative or non-finite entry: {nu:?}")));
        }
        let s: f64 = nu.iter().sum();
        if (s - 1.0).abs() > PARAM_TOL {
            return Err(Error::InvalidParameters(format!("ν sums to {s}, not 1")));
        }
        if kernel.len() != k || kernel.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidParameters(format!("kernel must be {k}×{k}")));
        }
        let flat: Vec<f64> = kernel.into_iter().flatten().collect();
        if flat.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::InvalidParameters("kernel has a negative or non-finite entry".into()));
        }
        for a in 0..k {
            for b in 0..a {
                if (flat[a * k + b] - flat[b * k + a]).abs() > PARAM_TOL {
                    return Err(Error::InvalidParameters(format!("kernel is not symmetric at ({a},{b})")));
                }
            }
        }
        if flat.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidParameters("kernel is identically zero".into()));
        }
        Ok(ModelParameters { k, d, nu, kernel: flat, geometry })
    }

    /// Single colour with kernel `c`.
    pub fn monochrome(d: usize, c: f64, geometry: Geometry) -> Result<Self> {
        Self::new(d, vec![1.0], vec![vec![c]], geometry)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn kernel(&self, a: usize, b: usize) -> f64 {
        self.kernel[a * self.k + b]
    }

    /// Row-major `k×k` kernel.
    pub fn kernel_matrix(&self) -> &[f64] {
        &self.kernel
    }

    pub fn kernel_max(&self) -> f64 {
        self.kernel.iter().cloned().fold(0.0, f64::max)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    /// Volume of the unit ball in dimension `d`.
    pub fn rho(&self) -> f64 {
        ball_volume(self.d)
    }

    pub fn colour_law(&self) -> ColourMeasure {
        ColourMeasure::from_weights(self.nu.clone()).expect("validated colour law")
    }

    fn repr(&self) -> ModelParametersRepr {
        ModelParametersRepr {
            k: Some(self.k),
            d: self.d,
            nu: self.nu.clone(),
            kernel: self.kernel.chunks(self.k).map(|r| r.to_vec()).collect(),
            geometry: self.geometry,
        }
    }
}

impl Serialize for ModelParameters {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.repr().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelParameters {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ModelParametersRepr::deserialize(d)?;
        if let Some(k) = r.k {
            if k != r.nu.len() {
                return Err(serde::de::Error::custom(format!(
                    "k = {k} but ν has {} entries",
                    r.nu.len()
                )));
            }
        }
        ModelParameters::new(r.d, r.nu, r.kernel, r.geometry).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    Colour,
    ColourPair,
    ColourProfile,
}

/// A support point type for [`FiniteMeasure`].
pub trait Atom: Clone + Ord + fmt::Debug + Send + Sync {
    const KIND: SupportKind;
    fn check(&self, k: usize) -> Result<()>;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl Atom for usize {
    const KIND: SupportKind = SupportKind::Colour;

    fn check(&self, k: usize) -> Result<()> {
        if *self < k {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!("colour {self} outside alphabet of size {k}")))
        }
    }

    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(v: &Value) -> Result<Self> {
        v.as_u64()
            .map(|a| a as usize)
            .ok_or_else(|| Error::InvalidMeasure(format!("colour atom {v} is not an index")))
    }
}

impl Atom for (usize, usize) {
    const KIND: SupportKind = SupportKind::ColourPair;

    fn check(&self, k: usize) -> Result<()> {
        if self.0 < k && self.1 < k {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!("pair {self:?} outside alphabet of size {k}")))
        }
    }

    fn to_json(&self) -> Value {
        json!([self.0, self.1])
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v.as_array().map(|a| a.as_slice()) {
            Some([a, b]) => match (a.as_u64(), b.as_u64()) {
                (Some(a), Some(b)) => Ok((a as usize, b as usize)),
                _ => Err(Error::InvalidMeasure(format!("pair atom {v} is not two indices"))),
            },
            _ => Err(Error::InvalidMeasure(format!("pair atom {v} is not two indices"))),
        }
    }
}

impl Atom for ProfileAtom {
    const KIND: SupportKind = SupportKind::ColourProfile;

    fn check(&self, k: usize) -> Result<()> {
        if self.colour >= k || self.profile.max_colour().is_some_and(|b| b >= k) {
            return Err(Error::InvalidMeasure(format!(
                "atom ({}, {}) outside alphabet of size {k}",
                self.colour, self.profile
            )));
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        ProfileAtom::to_json(self)
    }

    fn from_json(v: &Value) -> Result<Self> {
        ProfileAtom::from_json(v)
    }
}

/// A finite nonnegative measure on a finite set of atoms over an alphabet of
/// size `k`. Atoms are kept sorted and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure<A> {
    k: usize,
    atoms: Vec<A>,
    weights: Vec<f64>,
}

pub type ColourMeasure = FiniteMeasure<usize>;
pub type PairMeasure = FiniteMeasure<(usize, usize)>;
pub type NeighbourhoodMeasure = FiniteMeasure<ProfileAtom>;

impl<A: Atom> FiniteMeasure<A> {
    /// Builds a measure from `(atom, weight)` pairs. Repeated atoms are summed.
    pub fn from_pairs<I: IntoIterator<Item = (A, f64)>>(k: usize, pairs: I) -> Result<Self> {
        let mut v: Vec<(A, f64)> = pairs.into_iter().collect();
        for (a, w) in &v {
            a.check(k)?;
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidMeasure(format!("weight {w} at {a:?} is not a finite nonnegative number")));
            }
        }
        v.sort_by(|x, y| x.0.cmp(&y.0));
        let mut atoms: Vec<A> = Vec::with_capacity(v.len());
        let mut weights: Vec<f64> = Vec::with_capacity(v.len());
        for (a, w) in v {
            if atoms.last() == Some(&a) {
                *weights.last_mut().unwrap() += w;
            } else {
                atoms.push(a);
                weights.push(w);
            }
        }
        Ok(FiniteMeasure { k, atoms, weights })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> SupportKind {
        A::KIND
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, atom: &A) -> f64 {
        self.atoms.binary_search(atom).map(|i| self.weights[i]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    pub fn atoms(&self) -> &[A] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        (self.total_mass() - 1.0).abs() <= tol
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_pairs(self.k, self.iter().map(|(a, w)| (a.clone(), w * factor)))
    }
}

impl FiniteMeasure<usize> {
    /// Dense colour measure with `k = weights.len()`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        Self::from_pairs(k, weights.into_iter().enumerate())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.k).map(|a| self.get(&a)).collect()
    }
}

impl FiniteMeasure<(usize, usize)> {
    /// Dense pair measure from a row-major `k×k` matrix.
    pub fn from_matrix(k: usize, m: &[f64]) -> Result<Self> {
        if m.len() != k * k {
            return Err(Error::DimensionMismatch { expected: k * k, found: m.len() });
        }
        Self::from_pairs(k, (0..k).flat_map(|a| (0..k).map(move |b| ((a, b), m[a * k + b]))))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidMeasure("pair measure rows must form a square matrix".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_matrix(k, &flat)
    }

    pub fn to_matrix(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k * self.k];
        for (&(a, b), w) in self.iter() {
            m[a * self.k + b] = w;
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let m = self.to_matrix();
        let k = self.k;
        (0..k).all(|a| (0..a).all(|b| (m[a * k + b] - m[b * k + a]).abs() <= tol * (1.0 + m[a * k + b].abs())))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr {
    kind: SupportKind,
    k: usize,
    support: Vec<Value>,
    weights: Vec<f64>,
    #[serde(default)]
    total_mass: Option<f64>,
}

impl<A: Atom> Serialize for FiniteMeasure<A> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            kind: A::KIND,
            k: self.k,
            support: self.atoms.iter().map(Atom::to_json).collect(),
            weights: self.weights.clone(),
            total_mass: Some(self.total_mass()),
        }
        .serialize(s)
    }
}

impl<'de, A: Atom> Deserialize<'de> for FiniteMeasure<A> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = MeasureRepr::deserialize(d)?;
        if r.kind != A::KIND {
            return Err(D::Error::custom(format!("expected a {:?} measure, found {:?}", A::KIND, r.kind)));
        }
        if r.support.len() != r.weights.len() {
            return Err(D::Error::custom("support and weights differ in length"));
        }
        let atoms = r
            .support
            .iter()
            .map(A::from_json)
            .collect::<Result<Vec<A>>>()
            .map_err(D::Error::custom)?;
        let m = FiniteMeasure::from_pairs(r.k, atoms.into_iter().zip(r.weights)).map_err(D::Error::custom)?;
        if let Some(t) = r.total_mass {
            if (t - m.total_mass()).abs() > 1e-9 * (1.0 + t.abs()) {
                return Err(D::Error::custom(format!(
                    "total_mass {t} disagrees with the weights (sum {})",
                    m.total_mass()
                )));
            }
        }
        Ok(m)
    }
}

/// `Σ p log(p/q)` with `0·log(0/q) = 0` and `+∞` when `p(x) > 0 = q(x)`.
///
/// No mass-correction terms are added, so this is not guaranteed to be
/// nonnegative unless `∥p∥ = ∥q∥`.
pub fn relative_entropy<A: Atom>(p: &FiniteMeasure<A>, q: &FiniteMeasure<A>) -> Result<f64> {
    if p.k != q.k {
        return Err(Error::SupportMismatch(format!(
            "alphabets of size {} and {}",
            p.k, q.k
        )));
    }
    let mut total = 0.0;
    for (atom, pw) in p.iter() {
        if pw == 0.0 {
            continue;
        }
        let qw = q.get(atom);
        if qw == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pw * (pw / qw).ln();
    }
    Ok(total)
}

/// Total-variation distance `½ Σ |p − q|` over the union of supports.
pub fn total_variation<A: Atom>(p: &FiniteMeasure<A>, q: &FiniteMeasure<A>) -> Result<f64> {
    if p.k != q.k {
        return Err(Error::SupportMismatch(format!("alphabets of size {} and {}", p.k, q.k)));
    }
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < p.atoms.len() || j < q.atoms.len() {
        let ord = match (p.atoms.get(i), q.atoms.get(j)) {
            (Some(a), Some(b)) => a.cmp(b),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                acc += p.weights[i];
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                acc += q.weights[j];
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                acc += (p.weights[i] - q.weights[j]).abs();
                i += 1;
                j += 1;
            }
        }
    }
    Ok(0.5 * acc)
}

pub(crate) fn check_probability_vector(omega: &ColourMeasure, what: &str) -> Result<()> {
    if !omega.is_probability(PARAM_TOL) {
        return Err(Error::InvalidMeasure(format!(
            "{what} must be a probability vector (mass {})",
            omega.total_mass()
        )));
    }
    Ok(())
}

/// `ρ(d)·Cω⊗ω`, the intensity of pairs under colour law `ω`.
pub fn typical_pair_measure(omega: &ColourMeasure, params: &ModelParameters) -> Result<PairMeasure> {
    let k = params.k();
    if omega.k() != k {
        return Err(Error::DimensionMismatch { expected: k, found: omega.k() });
    }
    let rho = params.rho();
    let w = omega.to_dense();
    let m: Vec<f64> = (0..k * k)
        .map(|i| rho * params.kernel(i / k, i % k) * w[i / k] * w[i % k])
        .collect();
    PairMeasure::from_matrix(k, &m)
}

/// `ℌ(ϖ ∥ ω) = H(ϖ ∥ ρ(d)Cω⊗ω) + ρ(d)∥Cω⊗ω∥ − ∥ϖ∥`.
///
/// Nonnegative, and zero exactly when `ϖ = ρ(d)Cω⊗ω`.
pub fn h_functional(varpi: &PairMeasure, omega: &ColourMeasure, params: &ModelParameters) -> Result<f64> {
    let k = params.k();
    if varpi.k() != k {
        return Err(Error::DimensionMismatch { expected: k, found: varpi.k() });
    }
    if !varpi.is_symmetric(PARAM_TOL) {
        return Err(Error::InvalidMeasure("ϖ must be symmetric".into()));
    }
    check_probability_vector(omega, "ω")?;
    let reference = typical_pair_measure(omega, params)?;
    let h = relative_entropy(varpi, &reference)?;
    if h.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(h + reference.total_mass() - varpi.total_mass())
}

/// Colour marginal `μ₁(a) = Σ_ℓ μ(a,ℓ)` and `ℌ₂(μ)`, stored so that
/// `h2.get(&(b, a)) = Σ_ℓ ℓ(b) μ(a,ℓ)`.
pub fn profile_marginals(mu: &NeighbourhoodMeasure) -> Result<(ColourMeasure, PairMeasure)> {
    let k = mu.k();
    let mut mu1 = vec![0.0; k];
    let mut h2 = vec![0.0; k * k];
    for (atom, w) in mu.iter() {
        mu1[atom.colour] += w;
        for &(b, c) in atom.profile.entries() {
            h2[b * k + atom.colour] += c as f64 * w;
        }
    }
    Ok((ColourMeasure::from_weights(mu1)?, PairMeasure::from_matrix(k, &h2)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consistency {
    Consistent,
    SubConsistent,
    Inconsistent,
}

/// Compares `ℌ₂(μ)` entrywise with `ϖ`.
///
/// `Consistent` when every entry agrees within `tol`, `SubConsistent` when
/// `ℌ₂(μ) ≤ ϖ + tol` everywhere with a strict gap somewhere, `Inconsistent`
/// otherwise. Only this relation is checked; no separate marginal condition
/// between `μ₁` and `ϖ` is imposed.
pub fn check_consistency(varpi: &PairMeasure, mu: &NeighbourhoodMeasure, tol: f64) -> Result<Consistency> {
    if varpi.k() != mu.k() {
        return Err(Error::DimensionMismatch { expected: varpi.k(), found: mu.k() });
    }
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance must be positive, got {tol}")));
    }
    let (_, h2) = profile_marginals(mu)?;
    let (h, v) = (h2.to_matrix(), varpi.to_matrix());
    let mut all_equal = true;
    for (x, y) in h.iter().zip(&v) {
        let diff = x - y;
        if diff > tol {
            return Ok(Consistency::Inconsistent);
        }
        if diff.abs() > tol {
            all_equal = false;
        }
    }
    Ok(if all_equal { Consistency::Consistent } else { Consistency::SubConsistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn mono(d: usize, c: f64) -> ModelParameters {
        ModelParameters::monochrome(d, c, Geometry::Torus).unwrap()
    }

    #[test]
    fn parameters_are_validated() {
        assert!(ModelParameters::new(2, vec![0.5, 0.4], vec![vec![1.0, 0.0], vec![0.0, 1.0]], Geometry::Torus).is_err());
        assert!(ModelParameters::new(2, vec![0.5, 0.5], vec![vec![1.0, 0.2], vec![0.0, 1.0]], Geometry::Torus).is_err());
        assert!(ModelParameters::new(2, vec![1.0], vec![vec![0.0]], Geometry::Torus).is_err());
        assert!(ModelParameters::new(0, vec![1.0], vec![vec![1.0]], Geometry::Torus).is_err());
        let p = ModelParameters::new(3, vec![0.25, 0.75], vec![vec![1.0, 2.0], vec![2.0, 0.5]], Geometry::Cube).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: ModelParameters = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<ModelParameters>(r#"{"d":2,"nu":[1],"kernel":[[1]],"extra":1}"#).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let p = ColourMeasure::from_weights(vec![0.2, 1.3]).unwrap();
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
        let p = ColourMeasure::from_weights(vec![1.0, 0.0]).unwrap();
        let q = ColourMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(relative_entropy(&p, &q).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(relative_entropy(&q, &p).unwrap(), f64::INFINITY);
        let p = ColourMeasure::from_weights(vec![0.3, 0.7]).unwrap();
        // second route: Σ p log p − Σ p log q
        let second: f64 = [0.3f64, 0.7].iter().map(|x| x * x.ln()).sum::<f64>()
            - [0.3f64, 0.7].iter().map(|x| x * 0.5f64.ln()).sum::<f64>();
        let v = relative_entropy(&p, &q).unwrap();
        assert_abs_diff_eq!(v, second, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.082_282_878_5, epsilon = 1e-9);
    }

    #[test]
    fn relative_entropy_rejects_mismatched_alphabets() {
        let p = ColourMeasure::from_weights(vec![1.0]).unwrap();
        let q = ColourMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        assert!(matches!(relative_entropy(&p, &q), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn h_functional_examples() {
        let params = mono(2, 1.0);
        let omega = ColourMeasure::from_weights(vec![1.0]).unwrap();
        let typical = PairMeasure::from_matrix(1, &[PI]).unwrap();
        assert_abs_diff_eq!(h_functional(&typical, &omega, &params).unwrap(), 0.0, epsilon = 1e-15);
        let doubled = PairMeasure::from_matrix(1, &[2.0 * PI]).unwrap();
        let expect = 2.0 * PI * 2f64.ln() + PI - 2.0 * PI;
        assert_abs_diff_eq!(h_functional(&doubled, &omega, &params).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 1.213_579_527, epsilon = 1e-9);

        let params = ModelParameters::new(2, vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]], Geometry::Torus).unwrap();
        let omega = params.colour_law();
        let off = PairMeasure::from_matrix(2, &[0.1, 0.2, 0.2, 0.1]).unwrap();
        assert_eq!(h_functional(&off, &omega, &params).unwrap(), f64::INFINITY);
    }

    #[test]
    fn consistency_classification() {
        let mu = NeighbourhoodMeasure::from_pairs(
            1,
            [
                (ProfileAtom::new(0, Profile::zero()), 0.5),
                (ProfileAtom::new(0, Profile::from_dense(&[2])), 0.5),
            ],
        )
        .unwrap();
        let varpi = PairMeasure::from_matrix(1, &[1.0]).unwrap();
        assert_eq!(check_consistency(&varpi, &mu, CONSISTENCY_TOL).unwrap(), Consistency::Consistent);
        let doubled = PairMeasure::from_matrix(1, &[2.0]).unwrap();
        assert_eq!(check_consistency(&doubled, &mu, CONSISTENCY_TOL).unwrap(), Consistency::SubConsistent);
        let short = PairMeasure::from_matrix(1, &[1.0 - 10.0 * CONSISTENCY_TOL]).unwrap();
        assert_eq!(check_consistency(&short, &mu, CONSISTENCY_TOL).unwrap(), Consistency::Inconsistent);
    }

    #[test]
    fn measure_json_shape() {
        let m = PairMeasure::from_matrix(2, &[0.0, 0.5, 0.5, 1.0]).unwrap();
        let v: Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["kind"], "colour_pair");
        assert_eq!(v["support"][1], json!([0, 1]));
        assert_eq!(v["total_mass"], json!(2.0));
        let back: PairMeasure = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
        let bad = json!({"kind":"colour","k":2,"support":[0,1],"weights":[0.5,0.5]});
        assert!(serde_json::from_value::<PairMeasure>(bad).is_err());
    }

    #[test]
    fn total_variation_over_union() {
        let p = ColourMeasure::from_pairs(3, [(0, 0.5), (1, 0.5)]).unwrap();
        let q = ColourMeasure::from_pairs(3, [(1, 0.5), (2, 0.5)]).unwrap();
        assert_abs_diff_eq!(total_variation(&p, &q).unwrap(), 0.5, epsilon = 1e-15);
    }
}
