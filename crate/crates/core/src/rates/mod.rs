//! Large-deviation rate functions and the typical point they vanish at.

mod edges;
mod isolated;

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::measures::{
    CONSISTENCY_TOL, ColourMeasure, Consistency, DegreeDistribution, ModelParameters, NeighbourhoodMeasure,
    PairMeasure, ProductPoisson, QMeasure, check_consistency, check_probability_vector, h_functional,
    profile_marginals, q_measure, q_measure_adaptive, relative_entropy, typical_pair_measure,
};

pub use edges::{PsiResult, QuadraticRange, psi, quadratic_range, rate_zeta, rate_zeta_direct};
pub use isolated::{ContractionResult, contraction_minimum, isolated_root, rate_xi1};

/// Negative values above this are rounding noise and are clamped to zero.
pub const NEGATIVE_TOL: f64 = 1e-7;

/// Truncation residual used whenever a profile sum is made explicit.
pub const TRUNCATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Root `a(y)` for `ξ₁`, optimal `y` for `ζ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmin: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub components: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub value: ExtReal,
    pub diagnostics: Diagnostics,
}

impl RateResult {
    /// Wraps a computed value, clamping rounding-level negatives to zero.
    pub fn new(value: f64, mut diagnostics: Diagnostics) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::Numerical("rate evaluated to NaN".into()));
        }
        if value < -NEGATIVE_TOL {
            return Err(Error::Numerical(format!("rate evaluated to {value} < 0")));
        }
        if value < 0.0 {
            diagnostics.components.insert("unclamped".into(), value);
        }
        Ok(RateResult { value: ExtReal(value.max(0.0)), diagnostics })
    }

    pub fn infinite(reason: impl Into<String>) -> Self {
        RateResult {
            value: ExtReal::INFINITY,
            diagnostics: Diagnostics { converged: true, reason: Some(reason.into()), ..Default::default() },
        }
    }

    pub fn value(&self) -> f64 {
        self.value.0
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Volume of the unit ball in `ℝ^d`, `π^{d/2}/Γ(d/2 + 1)`.
pub fn ball_volume(d: usize) -> f64 {
    // V_d = V_{d−2}·2π/d keeps the small cases exact
    let (mut v, start) = if d % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut j = start;
    while j <= d {
        v *= 2.0 * std::f64::consts::PI / j as f64;
        j += 2;
    }
    v
}

pub fn log_poisson_pmf(x: f64, m: u64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -x + m as f64 * x.ln() - ln_gamma(m as f64 + 1.0)
}

/// `q_x(m) = e^{−x}x^m/m!`, evaluated in log space.
pub fn poisson_pmf(x: f64, m: u64) -> f64 {
    log_poisson_pmf(x, m).exp()
}

/// `P{Poisson(x) > t}`.
pub fn poisson_upper_tail(x: f64, t: u64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if (t as f64) < x {
        let below: f64 = (0..=t).map(|m| poisson_pmf(x, m)).sum();
        return (1.0 - below).max(0.0);
    }
    let mut total = 0.0;
    let mut m = t + 1;
    let mut term = poisson_pmf(x, m);
    while term > 0.0 && term > 1e-18 * total {
        total += term;
        m += 1;
        term *= x / m as f64;
    }
    total
}

/// `I(ω, ϖ) = H(ω ∥ ν) + ½ℌ(ϖ ∥ ω)`.
pub fn rate_i(omega: &ColourMeasure, varpi: &PairMeasure, params: &ModelParameters) -> Result<RateResult> {
    if omega.k() != params.k() {
        return Err(Error::DimensionMismatch { expected: params.k(), found: omega.k() });
    }
    check_probability_vector(omega, "ω")?;
    let h_colour = relative_entropy(omega, &params.colour_law())?;
    if h_colour.is_infinite() {
        return Ok(RateResult::infinite("ω is not absolutely continuous with respect to ν"));
    }
    let h_pair = h_functional(varpi, omega, params)?;
    if h_pair.is_infinite() {
        return Ok(RateResult::infinite("ϖ charges a pair where Cω⊗ω vanishes"));
    }
    let mut diag = Diagnostics { converged: true, ..Default::default() };
    diag.components.insert("colour_entropy".into(), h_colour);
    diag.components.insert("pair_functional".into(), h_pair);
    RateResult::new(h_colour + 0.5 * h_pair, diag)
}

/// `J(ϖ, μ) = H(μ ∥ Q[ϖ, μ₁]) + H(μ₁ ∥ ν) + ½ℌ(ϖ ∥ μ₁)` on consistent pairs,
/// `+∞` otherwise.
///
/// `Q` is evaluated pointwise on the support of `μ`, so no truncation enters.
pub fn rate_j(varpi: &PairMeasure, mu: &NeighbourhoodMeasure, params: &ModelParameters) -> Result<RateResult> {
    let k = params.k();
    if varpi.k() != k || mu.k() != k {
        return Err(Error::DimensionMismatch { expected: k, found: if varpi.k() != k { varpi.k() } else { mu.k() } });
    }
    if !mu.is_probability(CONSISTENCY_TOL) {
        return Err(Error::InvalidMeasure(format!("μ must be a probability measure (mass {})", mu.total_mass())));
    }
    match check_consistency(varpi, mu, CONSISTENCY_TOL)? {
        Consistency::Consistent => {}
        other => return Ok(RateResult::infinite(format!("(ϖ, μ) is {other:?}, not consistent"))),
    }
    let (mu1, _) = profile_marginals(mu)?;
    let mu1 = mu1.scaled(1.0 / mu1.total_mass())?;
    let q = match ProductPoisson::new(varpi, &mu1) {
        Ok(q) => q,
        Err(Error::MassOnEmptyColour { colour, mass }) => {
            return Ok(RateResult::infinite(format!("ϖ puts mass {mass} on colour {colour} with μ₁ = 0")));
        }
        Err(e) => return Err(e),
    };
    let mut h_mu = 0.0;
    for (atom, w) in mu.iter() {
        if w == 0.0 {
            continue;
        }
        let lq = q.log_density(atom);
        if lq == f64::NEG_INFINITY {
            return Ok(RateResult::infinite(format!("μ charges {atom:?}, which Q[ϖ, μ₁] does not")));
        }
        h_mu += w * (w.ln() - lq);
    }
    let h_colour = relative_entropy(&mu1, &params.colour_law())?;
    if h_colour.is_infinite() {
        return Ok(RateResult::infinite("μ₁ is not absolutely continuous with respect to ν"));
    }
    let h_pair = h_functional(varpi, &mu1, params)?;
    if h_pair.is_infinite() {
        return Ok(RateResult::infinite("ϖ charges a pair where Cμ₁⊗μ₁ vanishes"));
    }
    let mut diag = Diagnostics { converged: true, ..Default::default() };
    diag.components.insert("neighbourhood_entropy".into(), h_mu);
    diag.components.insert("colour_entropy".into(), h_colour);
    diag.components.insert("pair_functional".into(), h_pair);
    RateResult::new(h_mu + h_colour + 0.5 * h_pair, diag)
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::OutOfRange(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// `H(δ ∥ q_x)` over the support of `δ`.
fn entropy_to_poisson(delta: &DegreeDistribution, x: f64) -> f64 {
    let mut h = 0.0;
    for (m, &w) in delta.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let lq = log_poisson_pmf(x, m as u64);
        if lq == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        h += w * (w.ln() - lq);
    }
    h
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * y.ln() }
}

/// The function minimised over `x ≥ ⟨δ⟩` in the degree rate:
/// `H(δ ∥ q_x) + ½x log x − ½x log ρc + ½ρc − ½x`.
pub fn eta_x(delta: &DegreeDistribution, x: f64, c: f64, d: usize) -> Result<f64> {
    check_c(c)?;
    if !(x >= 0.0) {
        return Err(Error::OutOfRange(format!("x must be nonnegative, got {x}")));
    }
    let rc = ball_volume(d) * c;
    Ok(entropy_to_poisson(delta, x) + 0.5 * xlogy(x, x / rc) + 0.5 * rc - 0.5 * x)
}

/// `η₁(δ) = ½⟨δ⟩log(⟨δ⟩/ρc) − ½⟨δ⟩ + ½ρc + H(δ ∥ q_{⟨δ⟩})`.
pub fn rate_eta1(delta: &DegreeDistribution, c: f64, d: usize) -> Result<RateResult> {
    let m = delta.mean();
    let v = eta_x(delta, m, c, d)?;
    if v.is_infinite() {
        return Ok(RateResult::infinite("δ is not absolutely continuous with respect to q_⟨δ⟩"));
    }
    let mut diag = Diagnostics { converged: true, ..Default::default() };
    diag.components.insert("mean_degree".into(), m);
    diag.components.insert("poisson_entropy".into(), entropy_to_poisson(delta, m));
    RateResult::new(v, diag)
}

/// Typical colour law, pair measure, neighbourhood measure and degree law.
#[derive(Debug, Clone, Serialize)]
pub struct TypicalMeasures {
    pub omega: ColourMeasure,
    pub varpi: PairMeasure,
    pub mu: QMeasure,
    pub delta: DegreeDistribution,
}

/// `ω* = ν`, `ϖ* = ρCν⊗ν`, `μ* = Q[ϖ*, ν]` and its total-degree marginal.
/// `truncation = None` uses the adaptive policy.
pub fn typical_measures(params: &ModelParameters, truncation: Option<u32>) -> Result<TypicalMeasures> {
    let omega = params.colour_law();
    let varpi = typical_pair_measure(&omega, params)?;
    let mu = match truncation {
        Some(t) => q_measure(&varpi, &omega, t)?,
        None => q_measure_adaptive(&varpi, &omega, TRUNCATION_TOL)?,
    };
    let k = params.k();
    let lambdas: Vec<f64> = (0..k)
        .map(|a| params.rho() * (0..k).map(|b| params.kernel(a, b) * params.nu()[b]).sum::<f64>())
        .collect();
    let delta = DegreeDistribution::poisson_mixture(params.nu(), &lambdas, 0.1 * TRUNCATION_TOL)?;
    Ok(TypicalMeasures { omega, varpi, mu, delta })
}

/// `δ*(0) = Σ_a ν(a) e^{−ρΣ_b C(a,b)ν(b)}`.
pub fn typical_isolated_fraction(params: &ModelParameters) -> f64 {
    let k = params.k();
    (0..k)
        .map(|a| {
            let lam = params.rho() * (0..k).map(|b| params.kernel(a, b) * params.nu()[b]).sum::<f64>();
            params.nu()[a] * (-lam).exp()
        })
        .sum()
}

/// `½ρ νᵀCν`, the typical number of edges per vertex.
pub fn typical_edges_per_vertex(params: &ModelParameters) -> f64 {
    let k = params.k();
    let nu = params.nu();
    0.5 * params.rho() * (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| params.kernel(a, b) * nu[a] * nu[b]).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Geometry, Profile, ProfileAtom};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_volume(1), 2.0);
        assert_eq!(ball_volume(2), PI);
        assert_abs_diff_eq!(ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-15);
        let gamma_form = PI.powf(2.5) / statrs::function::gamma::gamma(3.5);
        assert_abs_diff_eq!(ball_volume(5), gamma_form, epsilon = 1e-12);
    }

    #[test]
    fn poisson_pmf_examples() {
        assert_eq!(poisson_pmf(0.0, 0), 1.0);
        assert_abs_diff_eq!(poisson_pmf(1.0, 1), (-1f64).exp(), epsilon = 1e-16);
        let s: f64 = (0..=50).map(|m| poisson_pmf(PI, m)).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        let tail = poisson_upper_tail(PI, 10);
        let direct: f64 = 1.0 - (0..=10).map(|m| poisson_pmf(PI, m)).sum::<f64>();
        assert_abs_diff_eq!(tail, direct, epsilon = 1e-14);
    }

    #[test]
    fn rate_i_monochrome() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        let omega = ColourMeasure::from_weights(vec![1.0]).unwrap();
        let typical = PairMeasure::from_matrix(1, &[PI]).unwrap();
        assert_eq!(rate_i(&omega, &typical, &p).unwrap().value(), 0.0);
        let doubled = PairMeasure::from_matrix(1, &[2.0 * PI]).unwrap();
        assert_abs_diff_eq!(rate_i(&omega, &doubled, &p).unwrap().value(), PI * 2f64.ln() - 0.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn rate_i_outside_support() {
        let p = ModelParameters::new(2, vec![1.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]], Geometry::Torus).unwrap();
        let omega = ColourMeasure::from_weights(vec![0.5, 0.5]).unwrap();
        let varpi = PairMeasure::from_matrix(2, &[0.1; 4]).unwrap();
        assert!(!rate_i(&omega, &varpi, &p).unwrap().is_finite());
    }

    #[test]
    fn rate_j_typical_and_gate() {
        let p = ModelParameters::new(2, vec![0.4, 0.6], vec![vec![1.0, 0.5], vec![0.5, 2.0]], Geometry::Torus).unwrap();
        let t = typical_measures(&p, None).unwrap();
        assert!(rate_j(&t.varpi, &t.mu.measure, &p).unwrap().value() < 1e-9);
        let off = t.varpi.scaled(1.1).unwrap();
        assert!(!rate_j(&off, &t.mu.measure, &p).unwrap().is_finite());
    }

    #[test]
    fn rate_j_poisson_reduction() {
        // k = 1, μ = Poisson(2) profiles, ϖ = 2
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        let varpi = PairMeasure::from_matrix(1, &[2.0]).unwrap();
        let mu1 = ColourMeasure::from_weights(vec![1.0]).unwrap();
        let mu = q_measure_adaptive(&varpi, &mu1, 1e-15).unwrap().measure;
        let mu = mu.scaled(1.0 / mu.total_mass()).unwrap();
        let r = rate_j(&varpi, &mu, &p).unwrap();
        let closed = (2.0 / PI).ln() - 1.0 + PI / 2.0;
        assert_abs_diff_eq!(r.value(), closed, epsilon = 1e-9);
        assert_abs_diff_eq!(closed, 0.119_213_6, epsilon = 1e-7);
    }

    #[test]
    fn rate_j_empty_graph() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        let varpi = PairMeasure::from_matrix(1, &[0.0]).unwrap();
        let mu = NeighbourhoodMeasure::from_pairs(1, [(ProfileAtom::new(0, Profile::zero()), 1.0)]).unwrap();
        assert_abs_diff_eq!(rate_j(&varpi, &mu, &p).unwrap().value(), 0.5 * PI, epsilon = 1e-12);
    }

    #[test]
    fn eta1_examples() {
        let rc = PI;
        let typical = DegreeDistribution::poisson(rc, 1e-13).unwrap();
        assert!(rate_eta1(&typical, 1.0, 2).unwrap().value() < 1e-9);
        let zero = DegreeDistribution::point_mass(0);
        assert_abs_diff_eq!(rate_eta1(&zero, 1.0, 2).unwrap().value(), rc / 2.0, epsilon = 1e-15);
        let doubled = DegreeDistribution::poisson(2.0 * rc, 1e-14).unwrap();
        assert_abs_diff_eq!(rate_eta1(&doubled, 1.0, 2).unwrap().value(), PI * 2f64.ln() - 0.5 * PI, epsilon = 1e-9);
    }

    #[test]
    fn typical_isolated_prediction() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        assert_abs_diff_eq!(typical_isolated_fraction(&p), 0.043_213_918, epsilon = 1e-9);
        let t = typical_measures(&p, None).unwrap();
        assert_abs_diff_eq!(t.delta.get(0), (-PI).exp(), epsilon = 1e-15);
    }
}
