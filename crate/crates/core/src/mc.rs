//! Deterministic parallel Monte Carlo.
//!
//! Sample indices are grouped into fixed blocks. Block `b` of check `id`
//! draws from its own ChaCha stream keyed by `(seed, id, b)`, and block
//! statistics are merged in block order, so results do not depend on the
//! number of workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{rotation_2d, Mat3, Vec3};
use crate::polytope::Polytope;

/// Samples per RNG block.
pub const BLOCK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub sample_count: u64,
    pub seed: u64,
    #[serde(default = "one")]
    pub worker_count: usize,
    #[serde(default)]
    pub stratified: bool,
}

fn one() -> usize {
    1
}

impl MCConfig {
    pub fn new(sample_count: u64, seed: u64) -> Self {
        MCConfig { sample_count, seed, worker_count: 1, stratified: false }
    }

    pub fn with_workers(mut self, w: usize) -> Self {
        self.worker_count = w.max(1);
        self
    }

    pub fn with_samples(&self, n: u64) -> Self {
        MCConfig { sample_count: n, ..self.clone() }
    }

    /// Same configuration on an independent seed.
    pub fn fork(&self, salt: &str) -> Self {
        MCConfig { seed: splitmix(self.seed ^ check_id(salt)), ..self.clone() }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit identifier of a check name (FNV-1a).
pub fn check_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// RNG of one block.
pub fn block_rng(seed: u64, id: u64, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for (k, word) in [id, block, seed ^ id.rotate_left(17), block.rotate_left(29) ^ id].iter().enumerate() {
        s = splitmix(s ^ word);
        key[8 * k..8 * k + 8].copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Stats) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn scaled(&self, c: f64) -> Estimate {
        Estimate { value: c * self.mean, std_error: c.abs() * self.std_error(), samples: self.n }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, std_error: 0.0, samples: 0 }
    }

    /// Sum of independent (or conservatively combined) estimates.
    pub fn add(&self, o: &Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            std_error: (self.std_error.powi(2) + o.std_error.powi(2)).sqrt(),
            samples: self.samples.max(o.samples),
        }
    }

    pub fn scale(&self, c: f64) -> Estimate {
        Estimate { value: c * self.value, std_error: c.abs() * self.std_error, samples: self.samples }
    }
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

/// Run `f` once per sample and collect statistics of its `dim` outputs.
pub fn run_multi<F>(cfg: &MCConfig, id: u64, dim: usize, f: F) -> Vec<Stats>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let blocks = cfg.sample_count.div_ceil(BLOCK);
    let block_stats = |b: u64| {
        let mut rng = block_rng(cfg.seed, id, b);
        let len = BLOCK.min(cfg.sample_count - b * BLOCK);
        let mut st = vec![Stats::default(); dim];
        let mut out = vec![0.0; dim];
        for _ in 0..len {
            out.iter_mut().for_each(|x| *x = 0.0);
            f(&mut rng, &mut out);
            for (s, x) in st.iter_mut().zip(&out) {
                s.push(*x);
            }
        }
        st
    };
    let per_block: Vec<Vec<Stats>> = if cfg.worker_count <= 1 {
        (0..blocks).map(block_stats).collect()
    } else {
        pool(cfg.worker_count).install(|| (0..blocks).into_par_iter().map(block_stats).collect())
    };
    let mut total = vec![Stats::default(); dim];
    for st in &per_block {
        for (t, s) in total.iter_mut().zip(st) {
            t.merge(s);
        }
    }
    total
}

pub fn run<F>(cfg: &MCConfig, id: u64, f: F) -> Stats
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    run_multi(cfg, id, 1, |rng, out| out[0] = f(rng))[0]
}

/// Map `f` over `0..n` on `workers` threads, preserving order.
pub fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(workers: usize, n: usize, f: F) -> Vec<T> {
    if workers <= 1 {
        (0..n).map(f).collect()
    } else {
        pool(workers).install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Haar-uniform rotation of R^d.
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat3 {
    if d == 2 {
        return rotation_2d(rng.random::<f64>() * std::f64::consts::TAU);
    }
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Standard Gaussian vector in R^d.
pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec3 {
    let mut v = Vec3::zeros();
    for i in 0..d {
        v[i] = rng.sample(StandardNormal);
    }
    v
}

/// Uniform point in a simplex given by its vertices.
pub fn uniform_in_simplex<R: Rng + ?Sized>(s: &[Vec3], rng: &mut R) -> Vec3 {
    let e: Vec<f64> = (0..s.len()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    s.iter().zip(&e).map(|(v, w)| v * (w / total)).sum()
}

/// Uniform sampling in a full-dimensional polytope.
#[derive(Clone, Debug)]
pub struct UniformSampler {
    simplices: Vec<Vec<Vec3>>,
    cdf: Vec<f64>,
    volume: f64,
}

impl UniformSampler {
    pub fn new(p: &Polytope) -> Self {
        let parts = p.simplices();
        let volume: f64 = parts.iter().map(|s| s.1).sum();
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(parts.len());
        let mut simplices = Vec::with_capacity(parts.len());
        for (s, v) in parts {
            acc += v / volume;
            cdf.push(acc);
            simplices.push(s);
        }
        UniformSampler { simplices, cdf, volume }
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|c| *c < u).min(self.simplices.len() - 1);
        uniform_in_simplex(&self.simplices[k], rng)
    }
}
