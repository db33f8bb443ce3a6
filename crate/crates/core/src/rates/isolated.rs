use serde::Serialize;

use super::{Diagnostics, RateResult, ball_volume, check_c, eta_x, log_poisson_pmf, xlogy};
use crate::error::{Error, Result};
use crate::measures::DegreeDistribution;
use crate::optim::{Root, grid_then_golden, newton_bisect};

/// Residual target for the isolated-vertex root.
const ROOT_TOL: f64 = 1e-13;

fn check_y(y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::OutOfRange(format!("y must lie in [0,1], got {y}")));
    }
    Ok(())
}

/// The root `a(y) ≥ 0` of `a(1 − e^{−a}) = ρc(1 − y)`.
pub fn isolated_root(y: f64, c: f64, d: usize) -> Result<Root> {
    check_y(y)?;
    check_c(c)?;
    let t = ball_volume(d) * c * (1.0 - y);
    if t == 0.0 {
        return Ok(Root { x: 0.0, residual: 0.0, iterations: 0 });
    }
    let phi = |a: f64| -a * (-a).exp_m1() - t;
    let dphi = |a: f64| -(-a).exp_m1() + a * (-a).exp();
    newton_bisect(phi, dphi, 0.0, t + 1.0, ROOT_TOL)
}

/// `ξ₁(y)`, the rate of the isolated-vertex fraction.
pub fn rate_xi1(y: f64, c: f64, d: usize) -> Result<RateResult> {
    let root = isolated_root(y, c, d)?;
    let rc = ball_volume(d) * c;
    let mut diag = Diagnostics {
        converged: root.residual < 1e-12,
        iterations: root.iterations,
        residual: Some(root.residual),
        root: Some(root.x),
        ..Default::default()
    };
    if y == 1.0 {
        return RateResult::new(0.5 * rc, diag);
    }
    let a = root.x;
    let s = 1.0 - y;
    let bracket = (rc / a).ln() - (a - rc * s).powi(2) / (2.0 * rc * s);
    let v = xlogy(y, y) + rc * y * (1.0 - 0.5 * y) - s * bracket;
    if !diag.converged {
        diag.reason = Some("root residual above 1e-12".into());
    }
    RateResult::new(v, diag)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionResult {
    pub value: f64,
    pub mean: f64,
    pub delta: DegreeDistribution,
    pub iterations: usize,
}

/// `δ` on `0..=support` with `δ(0) = y` and mean `m` closest to `q_m` in
/// relative entropy: `q_λ` conditioned on `1..=support`, scaled by `1 − y`,
/// with `λ` chosen to hit the mean.
fn tilted_degree_law(y: f64, m: f64, support: usize) -> Vec<f64> {
    let s = 1.0 - y;
    let cond = |lam: f64| -> (Vec<f64>, f64) {
        let logs: Vec<f64> = (1..=support).map(|k| log_poisson_pmf(lam, k as u64)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        let mean = w.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum::<f64>() / z;
        (w.into_iter().map(|x| s * x / z).collect(), mean)
    };
    let target = m / s;
    // conditional mean is increasing in λ; bisect on log λ
    let (mut lo, mut hi) = (-40.0f64, (support as f64).ln() + 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cond(mid.exp()).1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut out = vec![y];
    out.extend(cond((0.5 * (lo + hi)).exp()).0);
    out
}

/// Minimum of `η₁` over degree laws on `0..=support` with `δ(0) = y`.
///
/// An independent route to `ξ₁(y)`: for fixed mean the inner problem is an
/// exponential tilt solved exactly, and the mean is optimised by a grid scan
/// and golden section.
pub fn contraction_minimum(y: f64, c: f64, d: usize, support: usize) -> Result<ContractionResult> {
    check_y(y)?;
    check_c(c)?;
    if y == 1.0 {
        let delta = DegreeDistribution::point_mass(0);
        let value = eta_x(&delta, 0.0, c, d)?;
        return Ok(ContractionResult { value, mean: 0.0, delta, iterations: 0 });
    }
    let s = 1.0 - y;
    let objective = |m: f64| -> f64 {
        let w = tilted_degree_law(y, m, support);
        let s: f64 = w.iter().sum();
        let w: Vec<f64> = w.into_iter().map(|x| x / s).collect();
        match DegreeDistribution::new(w) {
            Ok(delta) => eta_x(&delta, delta.mean(), c, d).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };
    let lo = s * (1.0 + 1e-9);
    let hi = s * (support as f64).min(40.0);
    let r = grid_then_golden(objective, lo, hi, 81, 1e-10);
    let w = tilted_degree_law(y, r.x, support);
    let total: f64 = w.iter().sum();
    let delta = DegreeDistribution::new(w.into_iter().map(|x| x / total).collect())?;
    Ok(ContractionResult { value: r.value, mean: delta.mean(), delta, iterations: r.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::poisson_pmf;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn root_residuals() {
        for &y in &[0.0, 1e-6, 0.1, 0.3, 0.5, 0.9, 1.0 - 1e-9, 1.0] {
            let r = isolated_root(y, 1.0, 2).unwrap();
            assert!(r.residual < 1e-12, "y = {y}: {r:?}");
        }
        assert_abs_diff_eq!(isolated_root(0.3, 1.0, 2).unwrap().x, 2.414_944_055_5, epsilon = 1e-9);
        assert!(isolated_root(1.5, 1.0, 2).is_err());
    }

    #[test]
    fn xi1_examples() {
        assert!(rate_xi1((-PI).exp(), 1.0, 2).unwrap().value() < 1e-9);
        assert_abs_diff_eq!(rate_xi1(1.0, 1.0, 2).unwrap().value(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rate_xi1(1.0 - 1e-10, 1.0, 2).unwrap().value(), PI / 2.0, epsilon = 1e-4);
        assert_abs_diff_eq!(rate_xi1(0.3, 1.0, 2).unwrap().value(), 0.263_190_444_45, epsilon = 1e-9);
        assert!(rate_xi1(0.0, 1.0, 2).unwrap().is_finite());
    }

    #[test]
    fn contraction_matches_xi1() {
        for &y in &[0.1, 0.5] {
            let r = contraction_minimum(y, 1.0, 2, 60).unwrap();
            let xi = rate_xi1(y, 1.0, 2).unwrap();
            assert_abs_diff_eq!(r.value, xi.value(), epsilon = 1e-3);
            let a = xi.diagnostics.root.unwrap();
            for k in 1..20 {
                let expect = (1.0 - y) / (1.0 - (-a).exp()) * poisson_pmf(a, k as u64);
                assert_abs_diff_eq!(r.delta.get(k), expect, epsilon = 1e-4);
            }
        }
    }
}
