use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Diagnostics, RateResult, xlogy};
use crate::error::{Error, Result};
use crate::measures::ModelParameters;
use crate::optim::{bfgs, grid_then_golden};

const RESTARTS: u64 = 20;
const GRAD_TOL: f64 = 1e-10;
const MAX_ITER: usize = 10_000;
const CONSTRAINT_TOL: f64 = 1e-10;
const BRACKET_TOL: f64 = 1e-10;
const FACE_LIMIT: usize = 12;

/// `Y(ω) = ½ρ ωᵀCω` restricted to the support of `ν`.
struct Quadratic {
    /// Indices of colours with `ν > 0`.
    support: Vec<usize>,
    nu: Vec<f64>,
    /// `ρC` on the support, row-major.
    m: Vec<f64>,
}

impl Quadratic {
    fn new(params: &ModelParameters) -> Self {
        let support: Vec<usize> = (0..params.k()).filter(|&a| params.nu()[a] > 0.0).collect();
        let nu = support.iter().map(|&a| params.nu()[a]).collect();
        let rho = params.rho();
        let m = support
            .iter()
            .flat_map(|&a| support.iter().map(move |&b| (a, b)))
            .map(|(a, b)| rho * params.kernel(a, b))
            .collect();
        Quadratic { support, nu, m }
    }

    fn len(&self) -> usize {
        self.support.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let k = self.len();
        0.5 * (0..k).map(|a| w[a] * (0..k).map(|b| self.m[a * k + b] * w[b]).sum::<f64>()).sum::<f64>()
    }

    /// `∂Y/∂ω = ρCω`.
    fn grad(&self, w: &[f64], out: &mut [f64]) {
        let k = self.len();
        for a in 0..k {
            out[a] = (0..k).map(|b| self.m[a * k + b] * w[b]).sum();
        }
    }

    fn entropy(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.nu).map(|(&x, &p)| xlogy(x, x / p)).sum()
    }

    fn embed(&self, w: &[f64], k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k];
        for (i, &a) in self.support.iter().enumerate() {
            out[a] = w[i];
        }
        out
    }
}

fn softmax(z: &[f64], out: &mut [f64]) {
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, &x) in out.iter_mut().zip(z) {
        *o = (x - top).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}

/// Chain rule through softmax: `∂/∂z = ω ⊙ (∇ − ⟨ω, ∇⟩)`.
fn pull_back(w: &[f64], grad_w: &[f64], out: &mut [f64]) {
    let mean: f64 = w.iter().zip(grad_w).map(|(a, b)| a * b).sum();
    for ((o, &x), &g) in out.iter_mut().zip(w).zip(grad_w) {
        *o = x * (g - mean);
    }
}

/// Range of `½ρωᵀCω` over probability vectors supported where `ν > 0`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticRange {
    pub min: f64,
    pub max: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    pub exact: bool,
}

pub fn quadratic_range(params: &ModelParameters) -> QuadraticRange {
    let q = Quadratic::new(params);
    let (min, argmin, max, argmax, exact) = if q.len() <= FACE_LIMIT {
        let (a, b, c, d) = face_extremes(&q);
        (a, b, c, d, true)
    } else {
        let (a, b) = descend_extreme(&q, 1.0);
        let (c, d) = descend_extreme(&q, -1.0);
        (a, b, -c, d, false)
    };
    QuadraticRange {
        min,
        max,
        argmin: q.embed(&argmin, params.k()),
        argmax: q.embed(&argmax, params.k()),
        exact,
    }
}

/// Every stationary point of `Y` on the relative interior of every face of
/// the simplex, from `M_S ω = λ1, 1ᵀω = 1`. Degenerate faces are skipped:
/// along a null direction `Y` is affine, so the extreme is also found on a
/// smaller face.
fn face_extremes(q: &Quadratic) -> (f64, Vec<f64>, f64, Vec<f64>) {
    let k = q.len();
    let mut best_min = (f64::INFINITY, Vec::new());
    let mut best_max = (f64::NEG_INFINITY, Vec::new());
    for mask in 1u32..(1u32 << k) {
        let s: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let p = s.len();
        let mut a = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut rhs = DVector::<f64>::zeros(p + 1);
        for (i, &si) in s.iter().enumerate() {
            for (j, &sj) in s.iter().enumerate() {
                a[(i, j)] = q.m[si * k + sj];
            }
            a[(i, p)] = -1.0;
            a[(p, i)] = 1.0;
        }
        rhs[p] = 1.0;
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        if sol.iter().any(|x| !x.is_finite()) || (0..p).any(|i| sol[i] < -1e-12) {
            continue;
        }
        let mut w = vec![0.0; k];
        for (i, &si) in s.iter().enumerate() {
            w[si] = sol[i].max(0.0);
        }
        let t: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= t);
        let v = q.value(&w);
        if v < best_min.0 {
            best_min = (v, w.clone());
        }
        if v > best_max.0 {
            best_max = (v, w);
        }
    }
    (best_min.0, best_min.1, best_max.0, best_max.1)
}

/// Minimises `sign·Y` by BFGS in softmax coordinates from seeded starts.
fn descend_extreme(q: &Quadratic, sign: f64) -> (f64, Vec<f64>) {
    let k = q.len();
    let mut best = (f64::INFINITY, vec![1.0 / k as f64; k]);
    for seed in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z0: Vec<f64> = (0..k).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let mut w = vec![0.0; k];
        let mut gw = vec![0.0; k];
        let r = bfgs(
            |z, g| {
                softmax(z, &mut w);
                q.grad(&w, &mut gw);
                gw.iter_mut().for_each(|x| *x *= sign);
                pull_back(&w, &gw, g);
                sign * q.value(&w)
            },
            &z0,
            GRAD_TOL,
            MAX_ITER,
        );
        if r.value < best.0 {
            let mut w = vec![0.0; k];
            softmax(&r.x, &mut w);
            best = (r.value, w);
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiResult {
    pub value: f64,
    pub omega: Vec<f64>,
    pub constraint_residual: f64,
    pub iterations: usize,
}

/// `ψ(y) = inf{H(ω ∥ ν) : ½ρωᵀCω = y}`, `+∞` outside the attainable range.
///
/// Augmented Lagrangian in softmax coordinates, BFGS inner solves, best of
/// the seeded restarts and a start at `ν`.
pub fn psi(y: f64, params: &ModelParameters) -> Result<PsiResult> {
    let q = Quadratic::new(params);
    let range = quadratic_range(params);
    psi_with(&q, &range, y, params.k())
}

fn psi_with(q: &Quadratic, range: &QuadraticRange, y: f64, k_full: usize) -> Result<PsiResult> {
    let k = q.len();
    let tol = 1e-12 * (1.0 + range.max.abs());
    if y < range.min - tol || y > range.max + tol {
        return Ok(PsiResult { value: f64::INFINITY, omega: Vec::new(), constraint_residual: f64::INFINITY, iterations: 0 });
    }
    let endpoint = if (y - range.min).abs() <= tol {
        Some(&range.argmin)
    } else if (y - range.max).abs() <= tol {
        Some(&range.argmax)
    } else {
        None
    };
    if k == 1 || (range.max - range.min).abs() <= tol {
        // every ω attains y, so ν itself is optimal
        return Ok(PsiResult {
            value: 0.0,
            omega: q.embed(&q.nu, k_full),
            constraint_residual: (q.value(&q.nu) - y).abs(),
            iterations: 0,
        });
    }

    let mut starts: Vec<Vec<f64>> = vec![q.nu.iter().map(|p| p.ln()).collect()];
    for seed in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        starts.push((0..k).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect());
    }
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut iterations = 0;
    for z0 in starts {
        let (w, it) = augmented_lagrangian(q, y, z0);
        iterations += it;
        let resid = (q.value(&w) - y).abs();
        if resid > 1e3 * CONSTRAINT_TOL {
            continue;
        }
        let h = q.entropy(&w);
        if best.as_ref().is_none_or(|b| h < b.0) {
            best = Some((h, w, resid));
        }
    }
    // a face optimum may sit on the boundary, which softmax only approaches
    if let Some(wx) = endpoint {
        let restricted: Vec<f64> = q.support.iter().map(|&a| wx[a]).collect();
        let h = q.entropy(&restricted);
        if best.as_ref().is_none_or(|b| h < b.0) {
            best = Some((h, restricted.clone(), (q.value(&restricted) - y).abs()));
        }
    }
    let (value, w, resid) = best.ok_or_else(|| Error::Numerical(format!("ψ({y}): no restart met the constraint")))?;
    Ok(PsiResult { value, omega: q.embed(&w, k_full), constraint_residual: resid, iterations })
}

fn augmented_lagrangian(q: &Quadratic, y: f64, mut z: Vec<f64>) -> (Vec<f64>, usize) {
    let k = q.len();
    let mut lambda = 0.0;
    let mut mu = 10.0;
    let mut w = vec![0.0; k];
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let mut gw = vec![0.0; k];
        let mut gy = vec![0.0; k];
        let r = bfgs(
            |zz, g| {
                softmax(zz, &mut w);
                let c = q.value(&w) - y;
                q.grad(&w, &mut gy);
                let mult = lambda + mu * c;
                for a in 0..k {
                    let lw = if w[a] > 0.0 { (w[a] / q.nu[a]).ln() + 1.0 } else { -700.0 };
                    gw[a] = lw + mult * gy[a];
                }
                pull_back(&w, &gw, g);
                q.entropy(&w) + lambda * c + 0.5 * mu * c * c
            },
            &z,
            GRAD_TOL,
            MAX_ITER,
        );
        iterations += r.iterations;
        z = r.x;
        softmax(&z, &mut w);
        let c = q.value(&w) - y;
        if c.abs() < CONSTRAINT_TOL {
            break;
        }
        lambda += mu * c;
        if c.abs() > 0.25 * last {
            mu = (mu * 10.0).min(1e12);
        }
        last = c.abs();
    }
    (w, iterations)
}

/// `ζ(x) = x log x − x + inf_y {ψ(y) − x log y + y}` over the attainable
/// range of `y`.
pub fn rate_zeta(x: f64, params: &ModelParameters) -> Result<RateResult> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::OutOfRange(format!("x must be nonnegative, got {x}")));
    }
    let q = Quadratic::new(params);
    let range = quadratic_range(params);
    let outer = |y: f64| -> f64 {
        if y <= 0.0 {
            return if x > 0.0 { f64::INFINITY } else { psi_value(&q, &range, y, params.k()) };
        }
        psi_value(&q, &range, y, params.k()) - x * y.ln() + y
    };
    let (y_star, inner, iterations) = if (range.max - range.min).abs() <= 1e-12 * (1.0 + range.max) {
        (range.min, outer(range.min), 0)
    } else {
        let lo = if range.min <= 0.0 && x > 0.0 { range.min + 1e-12 * range.max } else { range.min };
        let r = grid_then_golden(outer, lo, range.max, 41, BRACKET_TOL);
        (r.x, r.value, r.iterations)
    };
    if inner.is_infinite() {
        return Ok(RateResult::infinite("no attainable y gives a finite value"));
    }
    let p = psi(y_star, params)?;
    let mut diag = Diagnostics {
        converged: p.constraint_residual < 1e3 * CONSTRAINT_TOL,
        iterations,
        residual: Some(p.constraint_residual),
        root: Some(y_star),
        argmin: Some(p.omega),
        ..Default::default()
    };
    diag.components.insert("psi".into(), p.value);
    diag.components.insert("y_min".into(), range.min);
    diag.components.insert("y_max".into(), range.max);
    RateResult::new(xlogy(x, x) - x + inner, diag)
}

fn psi_value(q: &Quadratic, range: &QuadraticRange, y: f64, k: usize) -> f64 {
    psi_with(q, range, y, k).map(|p| p.value).unwrap_or(f64::INFINITY)
}

/// `ζ(x)` through the unconstrained form
/// `x log x − x + min_ω {H(ω ∥ ν) − x log Y(ω) + Y(ω)}`.
pub fn rate_zeta_direct(x: f64, params: &ModelParameters) -> Result<RateResult> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::OutOfRange(format!("x must be nonnegative, got {x}")));
    }
    let q = Quadratic::new(params);
    let k = q.len();
    let objective = |w: &[f64]| -> f64 {
        let yv = q.value(w);
        if yv <= 0.0 && x > 0.0 {
            return f64::INFINITY;
        }
        q.entropy(w) - xlogy(x, yv) + yv
    };
    let (best_v, best_w, iterations) = if k == 1 {
        (objective(&[1.0]), vec![1.0], 0)
    } else {
        let mut starts: Vec<Vec<f64>> = vec![q.nu.iter().map(|p| p.ln()).collect()];
        for seed in 0..RESTARTS {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            starts.push((0..k).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect());
        }
        let mut best = (f64::INFINITY, Vec::new(), 0);
        for z0 in starts {
            let mut w = vec![0.0; k];
            let mut gw = vec![0.0; k];
            let mut gy = vec![0.0; k];
            let r = bfgs(
                |z, g| {
                    softmax(z, &mut w);
                    let yv = q.value(&w);
                    q.grad(&w, &mut gy);
                    for a in 0..k {
                        let lw = if w[a] > 0.0 { (w[a] / q.nu[a]).ln() + 1.0 } else { -700.0 };
                        gw[a] = lw + (1.0 - x / yv) * gy[a];
                    }
                    pull_back(&w, &gw, g);
                    objective(&w)
                },
                &z0,
                GRAD_TOL,
                MAX_ITER,
            );
            let mut w = vec![0.0; k];
            softmax(&r.x, &mut w);
            let v = objective(&w);
            best.2 += r.iterations;
            if v < best.0 {
                best = (v, w, best.2);
            }
        }
        best
    };
    // x = 0 can push ω to a face where Y vanishes; check the face extremes too
    let range = quadratic_range(params);
    let restricted: Vec<f64> = q.support.iter().map(|&a| range.argmin[a]).collect();
    let (best_v, best_w) = match objective(&restricted) {
        v if v < best_v => (v, restricted),
        _ => (best_v, best_w),
    };
    let mut diag = Diagnostics {
        converged: best_v.is_finite(),
        iterations,
        root: Some(q.value(&best_w)),
        argmin: Some(q.embed(&best_w, params.k())),
        ..Default::default()
    };
    if !best_v.is_finite() {
        diag.reason = Some("objective is infinite on the whole simplex".into());
        return Ok(RateResult { value: crate::ExtReal::INFINITY, diagnostics: diag });
    }
    RateResult::new(xlogy(x, x) - x + best_v, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Geometry;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn two_colour() -> ModelParameters {
        ModelParameters::new(2, vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]], Geometry::Torus).unwrap()
    }

    #[test]
    fn range_of_diagonal_kernel() {
        let r = quadratic_range(&two_colour());
        assert_abs_diff_eq!(r.min, PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.max, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn psi_at_typical_is_zero() {
        let p = psi(PI / 4.0, &two_colour()).unwrap();
        assert!(p.value.abs() < 1e-9, "{p:?}");
        assert!(psi(2.0, &two_colour()).unwrap().value.is_infinite());
    }

    #[test]
    fn zeta_monochrome_closed_form() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        assert!(rate_zeta(PI / 2.0, &p).unwrap().value() < 1e-12);
        let v = rate_zeta(PI, &p).unwrap().value();
        assert_abs_diff_eq!(v, PI * 2f64.ln() - PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zeta_two_colour_typical() {
        let v = rate_zeta(PI / 4.0, &two_colour()).unwrap().value();
        assert!(v < 1e-6, "{v}");
    }

    #[test]
    fn zeta_routes_agree() {
        let p = ModelParameters::new(2, vec![0.3, 0.7], vec![vec![2.0, 0.5], vec![0.5, 1.0]], Geometry::Torus).unwrap();
        for &x in &[0.0, 0.5, 1.2, 3.0] {
            let a = rate_zeta(x, &p).unwrap().value();
            let b = rate_zeta_direct(x, &p).unwrap().value();
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }
}
