//! Samplers for the null law and the exponentially tilted law.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::measures::{Geometry, ModelParameters};
use crate::rates::ball_volume;

/// Slack allowed when re-checking stored edges against their radius.
const DIST_SLACK: f64 = 1e-12;

/// How the edges of a sample were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeLaw {
    /// Distance threshold on the stored points.
    #[default]
    Geometric,
    /// Independent edges given the colours; no points are stored.
    Bernoulli,
}

/// A sampled graph. `points` is flat, `n·d` coordinates, or empty for
/// Bernoulli-edge samples. `radii` is row-major `k×k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub geometry: Geometry,
    pub seed: u64,
    pub colours: Vec<usize>,
    pub points: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    pub radii: Vec<f64>,
    pub edge_law: EdgeLaw,
}

impl GraphSample {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn radius(&self, a: usize, b: usize) -> f64 {
        self.radii[a * self.k + b]
    }

    /// Index ranges, no self-loops, no duplicate edges.
    pub fn validate_structure(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedSample(m));
        if self.colours.len() != self.n {
            return bad(format!("{} colours for {} vertices", self.colours.len(), self.n));
        }
        if let Some((v, c)) = self.colours.iter().enumerate().find(|(_, &c)| c >= self.k) {
            return bad(format!("vertex {v} has colour {c} outside alphabet of size {}", self.k));
        }
        if !self.points.is_empty() && self.points.len() != self.n * self.d {
            return bad(format!("{} coordinates for {} points in dimension {}", self.points.len(), self.n, self.d));
        }
        if self.radii.len() != self.k * self.k {
            return bad(format!("radius matrix has {} entries, expected {}", self.radii.len(), self.k * self.k));
        }
        let mut seen = HashSet::with_capacity(self.edges.len());
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            if i >= self.n || j >= self.n {
                return bad(format!("edge {e} ({i},{j}) references a vertex outside 0..{}", self.n));
            }
            if i == j {
                return bad(format!("edge {e} is a self-loop at vertex {i}"));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return bad(format!("edge {e} ({i},{j}) is a duplicate"));
            }
        }
        Ok(())
    }

    /// Structural checks plus, for geometric samples, that every edge
    /// respects its radius.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        if self.edge_law == EdgeLaw::Geometric && !self.points.is_empty() {
            if self.points.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::MalformedSample("a coordinate lies outside [0,1]".into()));
            }
            for &(i, j) in &self.edges {
                let r = self.radius(self.colours[i], self.colours[j]);
                let dist = distance(self.point(i), self.point(j), self.geometry);
                if dist > r + DIST_SLACK {
                    return Err(Error::MalformedSample(format!(
                        "edge ({i},{j}) has length {dist} above radius {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// One `"i j"` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::with_capacity(self.edges.len() * 12);
        for (i, j) in &self.edges {
            s.push_str(&format!("{i} {j}\n"));
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSampleRepr {
    n: usize,
    d: usize,
    k: usize,
    geometry: Geometry,
    seed: u64,
    #[serde(default)]
    edge_law: EdgeLaw,
    colours: Vec<usize>,
    points: Vec<Vec<f64>>,
    edges: Vec<[usize; 2]>,
    radii: Vec<Vec<f64>>,
}

impl Serialize for GraphSample {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphSampleRepr {
            n: self.n,
            d: self.d,
            k: self.k,
            geometry: self.geometry,
            seed: self.seed,
            edge_law: self.edge_law,
            colours: self.colours.clone(),
            points: self.points.chunks(self.d.max(1)).map(<[f64]>::to_vec).collect(),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
            radii: self.radii.chunks(self.k.max(1)).map(<[f64]>::to_vec).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GraphSample {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = GraphSampleRepr::deserialize(d)?;
        if r.points.iter().any(|p| p.len() != r.d) {
            return Err(D::Error::custom(format!("every point must have {} coordinates", r.d)));
        }
        if r.radii.len() != r.k || r.radii.iter().any(|row| row.len() != r.k) {
            return Err(D::Error::custom(format!("radii must be {0}×{0}", r.k)));
        }
        Ok(GraphSample {
            n: r.n,
            d: r.d,
            k: r.k,
            geometry: r.geometry,
            seed: r.seed,
            colours: r.colours,
            points: r.points.into_iter().flatten().collect(),
            edges: r.edges.into_iter().map(|[i, j]| (i, j)).collect(),
            radii: r.radii.into_iter().flatten().collect(),
            edge_law: r.edge_law,
        })
    }
}

/// Torus or Euclidean distance between two points of `[0,1]^d`.
pub fn distance(p: &[f64], q: &[f64], geometry: Geometry) -> f64 {
    squared_distance(p, q, geometry).sqrt()
}

fn squared_distance(p: &[f64], q: &[f64], geometry: Geometry) -> f64 {
    p.iter()
        .zip(q)
        .map(|(x, y)| {
            let mut t = (x - y).abs();
            if geometry == Geometry::Torus {
                t = t.min(1.0 - t);
            }
            t * t
        })
        .sum()
}

/// `F(t) = P{‖U₁ − U₂‖ ≤ t}` for independent uniform points, taken as
/// `ρ(d)t^d`. Exact on the torus for `t ≤ 1/2`; on the cube it ignores the
/// boundary and overestimates by `O(t^{d+1})`.
pub fn pair_distance_cdf(t: f64, d: usize, geometry: Geometry) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::OutOfRange(format!("distance must be nonnegative, got {t}")));
    }
    if geometry == Geometry::Torus && t > 0.5 {
        return Err(Error::OutOfRange(format!("torus formula needs t ≤ 1/2, got {t}")));
    }
    Ok(ball_volume(d) * t.powi(d as i32))
}

/// `r_n(a,b) = (C(a,b)/n)^{1/d}`, row-major. Fails on the torus when a
/// radius exceeds 1/2.
pub fn connection_radii(params: &ModelParameters, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameters("n must be at least 1".into()));
    }
    let radii: Vec<f64> = params
        .kernel_matrix()
        .iter()
        .map(|&c| (c / n as f64).powf(1.0 / params.d() as f64))
        .collect();
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    if params.geometry() == Geometry::Torus && rmax > 0.5 {
        return Err(Error::RadiusTooLarge { radius: rmax, n });
    }
    Ok(radii)
}

/// `F(r_n(a,b))` for every colour pair, row-major.
pub fn connection_probabilities(params: &ModelParameters, n: usize) -> Result<Vec<f64>> {
    connection_radii(params, n)?
        .into_iter()
        .map(|r| pair_distance_cdf(r, params.d(), params.geometry()).map(|f| f.min(1.0)))
        .collect()
}

/// Potentials `f` on colours and `g` on colour pairs for the tilted law.
/// `g` may be `−∞`, which forbids the corresponding edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltingPotentials {
    k: usize,
    f: Vec<f64>,
    g: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TiltingRepr {
    f: Vec<f64>,
    g: Vec<Vec<ExtReal>>,
}

impl TiltingPotentials {
    pub fn new(f: Vec<f64>, g: Vec<Vec<f64>>) -> Result<Self> {
        let k = f.len();
        if k == 0 {
            return Err(Error::InvalidParameters("f must have at least one entry".into()));
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameters("f must be finite".into()));
        }
        if g.len() != k || g.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameters(format!("g must be {k}×{k}")));
        }
        let g: Vec<f64> = g.into_iter().flatten().collect();
        for a in 0..k {
            for b in 0..k {
                let x = g[a * k + b];
                if x.is_nan() || x == f64::INFINITY {
                    return Err(Error::InvalidParameters(format!("g({a},{b}) = {x} is not allowed")));
                }
                if b < a && !(x == g[b * k + a] || (x - g[b * k + a]).abs() <= 1e-12) {
                    return Err(Error::InvalidParameters(format!("g is not symmetric at ({a},{b})")));
                }
            }
        }
        Ok(TiltingPotentials { k, f, g })
    }

    pub fn identity(k: usize) -> Self {
        TiltingPotentials { k, f: vec![0.0; k], g: vec![0.0; k * k] }
    }

    /// Only the edge potential, constant `g` on every pair.
    pub fn constant_g(k: usize, g: f64) -> Result<Self> {
        Self::new(vec![0.0; k], vec![vec![g; k]; k])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self, a: usize, b: usize) -> f64 {
        self.g[a * self.k + b]
    }

    pub fn f_is_zero(&self) -> bool {
        self.f.iter().all(|&x| x == 0.0)
    }

    pub fn g_is_zero(&self) -> bool {
        self.g.iter().all(|&x| x == 0.0)
    }

    /// `U_f = log Σ_a e^{f(a)} ν(a)`.
    pub fn u_f(&self, nu: &[f64]) -> f64 {
        if self.f_is_zero() {
            return 0.0;
        }
        let m = self.f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + self.f.iter().zip(nu).map(|(f, p)| p * (f - m).exp()).sum::<f64>().ln()
    }

    /// Tilted colour law `ν̃(a) = e^{f(a) − U_f} ν(a)`.
    pub fn tilted_colour_law(&self, nu: &[f64]) -> Vec<f64> {
        if self.f_is_zero() {
            return nu.to_vec();
        }
        let u = self.u_f(nu);
        self.f.iter().zip(nu).map(|(f, p)| p * (f - u).exp()).collect()
    }

    /// `h_n(a,b) = −n·log(1 − F + F e^{g})` with `F = F(r_n(a,b))`.
    pub fn h_n(&self, params: &ModelParameters, n: usize) -> Result<Vec<f64>> {
        self.check_k(params)?;
        let probs = connection_probabilities(params, n)?;
        Ok(probs
            .iter()
            .zip(&self.g)
            .map(|(&p, &g)| -(n as f64) * (p * g.exp_m1()).ln_1p())
            .collect())
    }

    /// `β(a,b) = ρ(d)(1 − e^{g})C(a,b)`, the limit of `h_n`.
    pub fn beta(&self, params: &ModelParameters) -> Result<Vec<f64>> {
        self.check_k(params)?;
        let rho = params.rho();
        Ok(self
            .g
            .iter()
            .zip(params.kernel_matrix())
            .map(|(&g, &c)| -rho * g.exp_m1() * c)
            .collect())
    }

    /// Tilted connection probability `F e^{g}/(1 − F + F e^{g})`.
    pub fn tilted_probabilities(&self, params: &ModelParameters, n: usize) -> Result<Vec<f64>> {
        self.check_k(params)?;
        let probs = connection_probabilities(params, n)?;
        Ok(probs
            .iter()
            .zip(&self.g)
            .map(|(&p, &g)| {
                if g == f64::NEG_INFINITY || p == 0.0 {
                    0.0
                } else {
                    let e = g.exp();
                    (p * e / (1.0 + p * g.exp_m1())).min(1.0)
                }
            })
            .collect())
    }

    fn check_k(&self, params: &ModelParameters) -> Result<()> {
        if params.k() != self.k {
            return Err(Error::DimensionMismatch { expected: params.k(), found: self.k });
        }
        Ok(())
    }
}

impl Serialize for TiltingPotentials {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TiltingRepr {
            f: self.f.clone(),
            g: self.g.chunks(self.k).map(|r| r.iter().map(|&x| ExtReal(x)).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TiltingPotentials {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TiltingRepr::deserialize(d)?;
        let g = r.g.into_iter().map(|row| row.into_iter().map(|x| x.0).collect()).collect();
        TiltingPotentials::new(r.f, g).map_err(serde::de::Error::custom)
    }
}

fn draw_colours(rng: &mut ChaCha8Rng, n: usize, law: &[f64]) -> Vec<usize> {
    let mut cum = Vec::with_capacity(law.len());
    let mut acc = 0.0;
    for &p in law {
        acc += p;
        cum.push(acc);
    }
    let last = law.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            cum.iter().position(|&c| u < c).unwrap_or(last).min(last)
        })
        .collect()
}

/// Edges with `dist ≤ r(colour_i, colour_j)`, found with a uniform cell grid
/// whose side is at least the largest radius. Sorted, `i < j`.
pub fn detect_edges(points: &[f64], colours: &[usize], radii: &[f64], k: usize, d: usize, geometry: Geometry) -> Vec<(usize, usize)> {
    let n = colours.len();
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    if n < 2 || rmax <= 0.0 {
        return Vec::new();
    }
    // cells per axis, capped so the grid has at most ~4n cells
    let mut m = ((1.0 / rmax).floor() as usize).max(1);
    let cap = 4 * n + 16;
    while m > 1 && m.checked_pow(d as u32).is_none_or(|c| c > cap) {
        m -= 1;
    }
    let ncells = m.pow(d as u32);
    let cell_of = |i: usize| -> usize {
        let mut idx = 0;
        for x in &points[i * d..(i + 1) * d] {
            let c = ((x * m as f64) as usize).min(m - 1);
            idx = idx * m + c;
        }
        idx
    };
    let mut heads = vec![0usize; ncells + 1];
    let cells: Vec<usize> = (0..n).map(cell_of).collect();
    for &c in &cells {
        heads[c + 1] += 1;
    }
    for c in 0..ncells {
        heads[c + 1] += heads[c];
    }
    let mut fill = heads.clone();
    let mut members = vec![0usize; n];
    for (i, &c) in cells.iter().enumerate() {
        members[fill[c]] = i;
        fill[c] += 1;
    }
    let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(d as u32))
        .map(|mut t| {
            (0..d)
                .map(|_| {
                    let o = (t % 3) as isize - 1;
                    t /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let mut edges = Vec::new();
    let mut coord = vec![0usize; d];
    let mut nbrs: Vec<usize> = Vec::with_capacity(offsets.len());
    for c in 0..ncells {
        if heads[c] == heads[c + 1] {
            continue;
        }
        let mut t = c;
        for slot in coord.iter_mut().rev() {
            *slot = t % m;
            t /= m;
        }
        nbrs.clear();
        'offs: for off in &offsets {
            let mut idx = 0;
            for (x, o) in coord.iter().zip(off) {
                let mut y = *x as isize + o;
                if y < 0 || y >= m as isize {
                    if geometry == Geometry::Cube {
                        continue 'offs;
                    }
                    y = y.rem_euclid(m as isize);
                }
                idx = idx * m + y as usize;
            }
            if idx >= c {
                nbrs.push(idx);
            }
        }
        nbrs.sort_unstable();
        nbrs.dedup();
        let own = &members[heads[c]..heads[c + 1]];
        for &nc in &nbrs {
            let other = &members[heads[nc]..heads[nc + 1]];
            for (s, &i) in own.iter().enumerate() {
                let pi = &points[i * d..(i + 1) * d];
                let start = if nc == c { s + 1 } else { 0 };
                for &j in &other[start..] {
                    let rr = r2[colours[i] * k + colours[j]];
                    if rr > 0.0 && squared_distance(pi, &points[j * d..(j + 1) * d], geometry) <= rr {
                        edges.push((i.min(j), i.max(j)));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Reference `O(n²)` edge detection.
pub fn brute_force_edges(points: &[f64], colours: &[usize], radii: &[f64], k: usize, d: usize, geometry: Geometry) -> Vec<(usize, usize)> {
    let n = colours.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let r = radii[colours[i] * k + colours[j]];
            if r > 0.0 && distance(&points[i * d..(i + 1) * d], &points[j * d..(j + 1) * d], geometry) <= r {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn sample_geometric(n: usize, params: &ModelParameters, law: &[f64], seed: u64) -> Result<GraphSample> {
    let radii = connection_radii(params, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colours = draw_colours(&mut rng, n, law);
    let d = params.d();
    let points: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let edges = detect_edges(&points, &colours, &radii, params.k(), d, params.geometry());
    Ok(GraphSample {
        n,
        d,
        k: params.k(),
        geometry: params.geometry(),
        seed,
        colours,
        points,
        edges,
        radii,
        edge_law: EdgeLaw::Geometric,
    })
}

/// A sample of the null law: uniform points, i.i.d. `ν` colours, distance
/// threshold edges. Deterministic in `seed`.
pub fn sample_cgrg(n: usize, params: &ModelParameters, seed: u64) -> Result<GraphSample> {
    sample_geometric(n, params, params.nu(), seed)
}

/// A sample of the tilted law and `log(dP/dP̃)` at that sample.
///
/// With `g ≡ 0` the sample is geometric with colours from `ν̃`, and with
/// `f ≡ 0` as well it is identical to [`sample_cgrg`] at the same seed with
/// weight exactly zero. Otherwise edges are independent given the colours
/// with the tilted probability, and the weight is taken against the
/// independent-edge law with probability `F(r_n)`, which on the torus has the
/// same pairwise edge marginals as the geometric graph.
pub fn sample_tilted(n: usize, params: &ModelParameters, pots: &TiltingPotentials, seed: u64) -> Result<(GraphSample, f64)> {
    if pots.k() != params.k() {
        return Err(Error::DimensionMismatch { expected: params.k(), found: pots.k() });
    }
    let law = pots.tilted_colour_law(params.nu());
    let u = pots.u_f(params.nu());
    let colour_term = |colours: &[usize]| -> f64 {
        if pots.f_is_zero() {
            0.0
        } else {
            colours.iter().map(|&c| pots.f()[c] - u).sum()
        }
    };
    if pots.g_is_zero() {
        let s = sample_geometric(n, params, &law, seed)?;
        let w = 0.0 - colour_term(&s.colours);
        return Ok((s, w));
    }

    let k = params.k();
    let tilted = pots.tilted_probabilities(params, n)?;
    let h = pots.h_n(params, n)?;
    let mut sample = bernoulli_sample(n, params, &law, &tilted, seed)?;
    let counts = block_counts(&sample, k);
    let mut edge_g = 0.0;
    let mut pair_h = 0.0;
    for a in 0..k {
        for b in a..k {
            let (pairs, hits) = counts[a * k + b];
            if pairs > 0 {
                pair_h += pairs as f64 * h[a * k + b] / n as f64;
            }
            if hits > 0 {
                edge_g += hits as f64 * pots.g(a, b);
            }
        }
    }
    let log_weight = -(colour_term(&sample.colours) + edge_g + pair_h);
    sample.seed = seed;
    Ok((sample, log_weight))
}

/// The independent-edge law: colours i.i.d. `ν`, each pair joined
/// independently with probability `F(r_n(a,b))`.
pub fn sample_bernoulli(n: usize, params: &ModelParameters, seed: u64) -> Result<GraphSample> {
    let probs = connection_probabilities(params, n)?;
    bernoulli_sample(n, params, params.nu(), &probs, seed)
}

fn bernoulli_sample(n: usize, params: &ModelParameters, law: &[f64], probs: &[f64], seed: u64) -> Result<GraphSample> {
    let k = params.k();
    let radii = connection_radii(params, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colours = draw_colours(&mut rng, n, law);
    let mut by_colour: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (v, &c) in colours.iter().enumerate() {
        by_colour[c].push(v);
    }
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a..k {
            let (va, vb) = (&by_colour[a], &by_colour[b]);
            let pairs = if a == b { va.len() * va.len().saturating_sub(1) / 2 } else { va.len() * vb.len() };
            for t in skip_sample(&mut rng, pairs, probs[a * k + b]) {
                let (i, j) = if a == b { triangular_pair(t, va.len()) } else { (t / vb.len(), t % vb.len()) };
                let (x, y) = (va[i], vb[j]);
                edges.push((x.min(y), x.max(y)));
            }
        }
    }
    edges.sort_unstable();
    Ok(GraphSample {
        n,
        d: params.d(),
        k,
        geometry: params.geometry(),
        seed,
        colours,
        points: Vec::new(),
        edges,
        radii,
        edge_law: EdgeLaw::Bernoulli,
    })
}

/// `(pairs, edges)` per unordered colour block, stored at `a·k + b`, `a ≤ b`.
fn block_counts(sample: &GraphSample, k: usize) -> Vec<(u64, u64)> {
    let mut sizes = vec![0u64; k];
    for &c in &sample.colours {
        sizes[c] += 1;
    }
    let mut out = vec![(0u64, 0u64); k * k];
    for a in 0..k {
        for b in a..k {
            out[a * k + b].0 = if a == b { sizes[a] * sizes[a].saturating_sub(1) / 2 } else { sizes[a] * sizes[b] };
        }
    }
    for &(i, j) in &sample.edges {
        let (a, b) = (sample.colours[i], sample.colours[j]);
        out[a.min(b) * k + a.max(b)].1 += 1;
    }
    out
}

/// Indices in `0..total` kept independently with probability `p`, drawn with
/// geometric skips.
pub(crate) fn skip_sample(rng: &mut ChaCha8Rng, total: usize, p: f64) -> Vec<usize> {
    if p <= 0.0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..total).collect();
    }
    let log_q = (-p).ln_1p();
    let mut out = Vec::new();
    let mut idx: f64 = -1.0;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        idx += 1.0 + (u.ln() / log_q).floor();
        if idx >= total as f64 {
            return out;
        }
        out.push(idx as usize);
    }
}

/// The `t`-th pair `(i, j)`, `i < j < m`, in row-major order.
pub(crate) fn triangular_pair(t: usize, m: usize) -> (usize, usize) {
    // row i starts at i·m − i(i+1)/2
    let start = |i: usize| i * m - i * (i + 1) / 2;
    let mf = m as f64;
    let disc = (2.0 * mf - 1.0).powi(2) - 8.0 * t as f64;
    let mut i = ((2.0 * mf - 1.0 - disc.max(0.0).sqrt()) / 2.0).floor().max(0.0) as usize;
    while i > 0 && start(i) > t {
        i -= 1;
    }
    while start(i + 1) <= t {
        i += 1;
    }
    (i, i + 1 + t - start(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn cdf_values() {
        assert_eq!(pair_distance_cdf(0.0, 2, Geometry::Torus).unwrap(), 0.0);
        assert_abs_diff_eq!(pair_distance_cdf(0.1, 2, Geometry::Torus).unwrap(), 0.031_415_926_535_9, epsilon = 1e-12);
        assert_abs_diff_eq!(pair_distance_cdf(0.25, 1, Geometry::Torus).unwrap(), 0.5, epsilon = 1e-15);
        assert!(pair_distance_cdf(0.6, 2, Geometry::Torus).is_err());
        assert!(pair_distance_cdf(0.6, 2, Geometry::Cube).is_ok());
    }

    #[test]
    fn triangular_indexing_is_a_bijection() {
        for m in 2..30 {
            let mut t = 0;
            for i in 0..m {
                for j in i + 1..m {
                    assert_eq!(triangular_pair(t, m), (i, j));
                    t += 1;
                }
            }
        }
    }

    #[test]
    fn single_vertex_has_no_edges() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Cube).unwrap();
        let s = sample_cgrg(1, &p, 3).unwrap();
        assert!(s.edges.is_empty());
    }

    #[test]
    fn radius_precondition() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        assert!(matches!(sample_cgrg(2, &p, 0), Err(Error::RadiusTooLarge { .. })));
        assert!(sample_cgrg(2, &p.with_geometry(Geometry::Cube), 0).is_ok());
    }

    #[test]
    fn identity_tilt_is_null_sampler() {
        let p = ModelParameters::new(2, vec![0.3, 0.7], vec![vec![1.0, 0.5], vec![0.5, 2.0]], Geometry::Torus).unwrap();
        let (s, w) = sample_tilted(500, &p, &TiltingPotentials::identity(2), 11).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(s, sample_cgrg(500, &p, 11).unwrap());
    }

    #[test]
    fn h_n_and_beta() {
        let p = ModelParameters::monochrome(2, 1.0, Geometry::Torus).unwrap();
        let pots = TiltingPotentials::constant_g(1, 2f64.ln()).unwrap();
        let beta = pots.beta(&p).unwrap()[0];
        assert_abs_diff_eq!(beta, -PI, epsilon = 1e-12);
        let h = pots.h_n(&p, 100_000).unwrap()[0];
        assert!((h - beta).abs() < 10.0 * beta.abs() / 1e5 * beta.abs().max(1.0));
        let forbid = TiltingPotentials::constant_g(1, f64::NEG_INFINITY).unwrap();
        assert_abs_diff_eq!(forbid.beta(&p).unwrap()[0], PI, epsilon = 1e-12);
        let (s, w) = sample_tilted(200, &p, &forbid, 1).unwrap();
        assert!(s.edges.is_empty());
        assert!(w.is_finite());
    }

    #[test]
    fn json_round_trip() {
        let p = ModelParameters::new(3, vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 2.0]], Geometry::Cube).unwrap();
        let s = sample_cgrg(50, &p, 9).unwrap();
        let back: GraphSample = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        back.validate().unwrap();
    }
}
