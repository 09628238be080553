//! Gauss-Legendre rules on [0, 1].

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

type Rule = (Vec<f64>, Vec<f64>);

/// Nodes and weights of the `n`-point Gauss-Legendre rule mapped to [0, 1].
pub fn gauss_legendre(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Box::leak(Box::new(compute_rule(n))))
}

fn compute_rule(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            if n == 1 {
                p1 = x;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Integrate `f` over [a, b] with the `n`-point rule.
pub fn integrate_interval(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = b - a;
    x.iter().zip(w).map(|(xi, wi)| wi * f(a + h * xi)).sum::<f64>() * h
}
