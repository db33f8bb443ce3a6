/// Per-replica seed, a SplitMix64-style mix of `(master, n, replica)` so
/// that results do not depend on scheduling.
pub fn replica_seed(master: u64, n: usize, replica: usize) -> u64 {
    let mut z = master;
    for v in [n as u64, replica as u64] {
        z = mix(z ^ mix(v.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    z
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Running mean and standard error (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanSe {
    count: usize,
    mean: f64,
    m2: f64,
}

impl MeanSe {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 { 0.0 } else { self.m2 / (self.count - 1) as f64 }
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 { 0.0 } else { (self.variance() / self.count as f64).sqrt() }
    }
}

/// Mean of `w·1_A` over `replicas` draws from log weights of the hits,
/// kept in log scale so tiny probabilities do not underflow.
#[derive(Debug, Clone)]
pub struct WeightedMean {
    replicas: usize,
    logs: Vec<f64>,
}

impl WeightedMean {
    pub fn new(replicas: usize) -> Self {
        WeightedMean { replicas, logs: Vec::new() }
    }

    pub fn push_log(&mut self, log_w: f64) {
        self.logs.push(log_w);
    }

    fn scale(&self) -> f64 {
        self.logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(Σw', Σw'²)` with `w' = w/e^{scale}`.
    fn sums(&self) -> (f64, f64) {
        let m = self.scale();
        self.logs.iter().fold((0.0, 0.0), |(s1, s2), &l| {
            let w = (l - m).exp();
            (s1 + w, s2 + w * w)
        })
    }

    pub fn log_mean(&self) -> f64 {
        if self.logs.is_empty() {
            return f64::NEG_INFINITY;
        }
        self.scale() + (self.sums().0 / self.replicas as f64).ln()
    }

    pub fn mean(&self) -> f64 {
        self.log_mean().exp()
    }

    /// Standard error of the mean divided by the mean.
    pub fn relative_std_err(&self) -> f64 {
        if self.logs.is_empty() || self.replicas < 2 {
            return f64::INFINITY;
        }
        let r = self.replicas as f64;
        let (s1, s2) = self.sums();
        let m1 = s1 / r;
        let var = (s2 / r - m1 * m1).max(0.0) * r / (r - 1.0);
        (var / r).sqrt() / m1
    }

    pub fn std_err(&self) -> f64 {
        if self.logs.is_empty() {
            return 0.0;
        }
        self.relative_std_err() * self.mean()
    }

    /// `(Σw)²/Σw²` over the hit weights.
    pub fn effective_sample_size(&self) -> f64 {
        if self.logs.is_empty() {
            return 0.0;
        }
        let (s1, s2) = self.sums();
        s1 * s1 / s2
    }
}
