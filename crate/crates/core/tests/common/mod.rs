#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transgeom::clip::clip_halfspace;
use transgeom::mc::gaussian_vector;
use transgeom::polytope::Halfspace;
use transgeom::{Polytope, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hull of `n` points in the unit ball of R^d around `center`.
pub fn random_polytope(d: usize, n: usize, center: Vec3, rng: &mut ChaCha8Rng) -> Polytope {
    loop {
        let pts: Vec<Vec3> = (0..n)
            .map(|_| {
                let g = gaussian_vector(d, rng).normalize();
                center + g * rng.random_range(0.3..1.0)
            })
            .collect();
        if let Ok(p) = Polytope::new(d, &pts) {
            if p.volume() > 0.05 {
                return p;
            }
        }
    }
}

pub fn random_body(d: usize, rng: &mut ChaCha8Rng) -> Polytope {
    let n = if d == 2 { rng.random_range(3..9) } else { rng.random_range(4..12) };
    random_polytope(d, n, Vec3::zeros(), rng)
}

pub fn random_unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec3 {
    gaussian_vector(d, rng).normalize()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Proptest configuration with a fixed RNG seed, for properties checked by
/// Monte Carlo at a 3σ level so that the suite is reproducible.
pub fn fixed_cases(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Default::default()
    }
}

pub fn through_interior(p: &Polytope, r: &mut rand_chacha::ChaCha8Rng) -> (Vec3, f64) {
    let n = random_unit_vector(p.ambient(), r);
    let (lo, hi) = (-p.support(&-n), p.support(&n));
    (n, lo + (hi - lo) * r.random_range(0.25..0.75))
}

/// `m` convex pieces with union `k`: repeatedly split the last piece into
/// two overlapping (or touching) halves.
pub fn cover(k: &Polytope, m: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<Polytope> {
    let mut out = vec![k.clone()];
    while out.len() < m {
        let last = out.pop().unwrap();
        let (n, c) = through_interior(&last, r);
        let delta = if r.random_bool(0.5) { 0.0 } else { 0.1 * (last.support(&n) + last.support(&-n)) };
        out.push(clip_halfspace(&last, &Halfspace { normal: n, offset: c + delta }).unwrap());
        out.push(clip_halfspace(&last, &Halfspace { normal: -n, offset: -(c - delta) }).unwrap());
    }
    out
}
