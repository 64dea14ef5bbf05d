//! Gauss-Legendre quadrature on [0, 1].
//!
//! Nodes are roots of the Legendre polynomial, found by Newton iteration
//! from the Chebyshev-based initial guess; an n-point rule integrates
//! polynomials of degree 2n-1 exactly.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

static CACHE: Lazy<RwLock<HashMap<usize, Arc<GaussRule>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// Nodes and weights of an n-point rule on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre value and derivative at `t` in [-1, 1] by the three-term
/// recurrence.
fn legendre_with_deriv(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (p0, 0.0);
    }
    let mut p1 = t;
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    // derivative from P_n and P_{n-1}
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

fn build(n: usize) -> GaussRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // initial guess (Chebyshev-like), then Newton
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, t);
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_deriv(n, t);
        let w = 2.0 / ((1.0 - t * t) * d * d);
        // map [-1,1] -> [0,1]
        nodes[i] = (1.0 - t) / 2.0;
        nodes[n - 1 - i] = (1.0 + t) / 2.0;
        weights[i] = w / 2.0;
        weights[n - 1 - i] = w / 2.0;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    GaussRule { nodes, weights }
}

/// The n-point rule, cached.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    if let Some(r) = CACHE.read().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(build(n));
    CACHE.write().unwrap().entry(n).or_insert_with(|| rule.clone());
    rule
}

/// Smallest rule size exact for a polynomial integrand of the given degree.
pub fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}
