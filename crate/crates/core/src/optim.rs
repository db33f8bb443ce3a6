//! Small scalar and smooth unconstrained optimisers used by the rate
//! functions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalarMin {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub width: f64,
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> ScalarMin {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iterations = 0;
    while b - a > tol && iterations < 500 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    // endpoints matter when the minimum sits on the boundary
    let (fa, fb) = (f(a.max(lo.min(hi))), f(b.min(lo.max(hi))));
    let best = [(x, value), (a, fa), (b, fb)]
        .into_iter()
        .fold((x, value), |acc, p| if p.1 < acc.1 { p } else { acc });
    ScalarMin { x: best.0, value: best.1, iterations, width: b - a }
}

/// Coarse grid scan over `[lo, hi]` followed by golden section around the
/// best grid point. Tolerates mildly non-unimodal objectives.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> ScalarMin {
    let points = points.max(3);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..points {
        let v = f(lo + step * i as f64);
        if v < best.1 {
            best = (i, v);
        }
    }
    let a = lo + step * best.0.saturating_sub(1) as f64;
    let b = (lo + step * (best.0 + 1) as f64).min(hi);
    let mut r = golden_section(&mut f, a, b, tol);
    r.iterations += points;
    if best.1 < r.value {
        r.x = lo + step * best.0 as f64;
        r.value = best.1;
    }
    r
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Root of an increasing `f` bracketed by `[lo, hi]`, by Newton steps that
/// fall back to bisection whenever they leave the bracket.
pub fn newton_bisect<F, D>(f: F, df: D, lo: f64, hi: f64, tol: f64) -> Result<Root>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::Numerical(format!("root not bracketed: f({a}) = {fa}, f({b}) = {fb}")));
    }
    let mut x = 0.5 * (a + b);
    for it in 1..=400 {
        let fx = f(x);
        if fx.abs() < tol {
            return Ok(Root { x, residual: fx.abs(), iterations: it });
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let slope = df(x);
        let step = x - fx / slope;
        x = if slope > 0.0 && step > a && step < b { step } else { 0.5 * (a + b) };
        if b - a <= f64::EPSILON * b.abs().max(1e-300) {
            let fx = f(x);
            return Ok(Root { x, residual: fx.abs(), iterations: it });
        }
    }
    let fx = f(x);
    Ok(Root { x, residual: fx.abs(), iterations: 400 })
}

#[derive(Debug, Clone, Serialize)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Quasi-Newton minimisation with an Armijo backtracking line search.
/// `fg` returns the value and writes the gradient.
pub fn bfgs<F>(mut fg: F, x0: &[f64], gtol: f64, max_iter: usize) -> BfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::zeros(n);
    let mut fx = fg(x.as_slice(), g.as_mut_slice());
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut xn = DVector::zeros(n);
    let mut gn = DVector::zeros(n);
    // consecutive steps that left f unchanged to rounding
    let mut stalled = 0;
    while iterations < max_iter && g.norm() > gtol && stalled < 5 {
        iterations += 1;
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            p = -g.clone();
            slope = -g.norm_squared();
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            xn.copy_from(&x);
            xn.axpy(t, &p, 1.0);
            let fnew = fg(xn.as_slice(), gn.as_mut_slice());
            if fnew.is_finite() && fnew <= fx + 1e-4 * t * slope {
                accepted = true;
                let s = &xn - &x;
                let y = &gn - &g;
                let sy = s.dot(&y);
                if fx - fnew <= 4.0 * f64::EPSILON * fx.abs().max(1e-300) {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                x.copy_from(&xn);
                g.copy_from(&gn);
                fx = fnew;
                if sy > 1e-14 * s.norm() * y.norm() {
                    let rho = 1.0 / sy;
                    let hy = &h * &y;
                    let yhy = y.dot(&hy);
                    // H += ρ²(sᵀy + yᵀHy) ssᵀ − ρ(Hy sᵀ + s yᵀH)
                    h += (rho * rho * (sy + yhy)) * (&s * s.transpose()) - rho * (&hy * s.transpose() + &s * hy.transpose());
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    BfgsResult { x: x.iter().copied().collect(), value: fx, grad_norm: g.norm(), iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let r = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((r.x - 0.3).abs() < 1e-8);
        let r = golden_section(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(r.x, 0.0);
    }

    #[test]
    fn newton_bisect_root() {
        let r = newton_bisect(|x| x.powi(3) - 2.0, |x| 3.0 * x * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
        assert!(newton_bisect(|x| x, |_| 1.0, 1.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn bfgs_on_rosenbrock() {
        let r = bfgs(
            |x, g| {
                g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
                g[1] = 200.0 * (x[1] - x[0] * x[0]);
                (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
            },
            &[-1.2, 1.0],
            1e-10,
            10_000,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{r:?}");
    }
}
