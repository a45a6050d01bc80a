//! Gauss rules on fixed intervals and against the Gaussian weight.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an interpolatory quadrature rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Largest Gauss–Hermite order the Newton recurrence can build before the
/// normalised Hermite values overflow.
pub const MAX_HERMITE_ORDER: usize = 512;

impl GaussRule {
    /// Gauss–Hermite rule for `∫ e^{-x²} f(x) dx`.
    ///
    /// Nodes start from the eigenvalues of the Jacobi matrix and are polished
    /// by Newton steps on the orthonormal Hermite recurrence, which also
    /// yields the weights.
    pub fn hermite(order: usize) -> GaussRule {
        assert!((1..=MAX_HERMITE_ORDER).contains(&order), "hermite order {order} out of range");
        let n = order;
        let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = nalgebra::SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        guesses.sort_by(f64::total_cmp);
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mut z in guesses {
            let mut pp = 0.0;
            for _ in 0..8 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes.push(z);
            weights.push(2.0 / (pp * pp));
        }
        // exact symmetry
        for i in 0..n / 2 {
            let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[n - 1 - i]);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Gauss–Legendre rule on `[a, b]`.
    pub fn legendre(order: usize, a: f64, b: f64) -> GaussRule {
        assert!(order >= 1);
        let n = order;
        let nf = n as f64;
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            x[i] = mid - half * z;
            x[n - 1 - i] = mid + half * z;
            w[i] = 2.0 * half / ((1.0 - z * z) * pp * pp);
            w[n - 1 - i] = w[i];
        }
        GaussRule { nodes: x, weights: w }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Shared Gauss–Hermite rule of the given order, built once per process.
pub fn hermite(order: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(order).or_insert_with(|| Arc::new(GaussRule::hermite(order))).clone()
}
