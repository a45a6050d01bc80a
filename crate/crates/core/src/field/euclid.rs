use std::f64::consts::PI;

use super::{FieldFunction, FieldModel};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// `∫_R cos(k₀τ) / (ω² + k₀²) dk₀` by direct quadrature in `k₀`, with
/// half-period panels and epsilon-algorithm acceleration of the tail.
/// Equals `π e^{-ω|τ|} / ω`.
pub fn time_kernel_by_quadrature(omega: f64, tau: f64) -> f64 {
    let tau = tau.abs();
    let inner = GaussRule::legendre(16, 0.0, 1.0);
    // Head: k₀ = ω tan θ turns the Lorentzian core into dθ / ω; beyond
    // a few ω the remaining stretch up to the first zero of the cosine is
    // split into geometrically growing panels.
    let head_end = if tau == 0.0 { f64::INFINITY } else { 0.5 * PI / tau };
    let core_end = head_end.min(8.0 * omega);
    let theta_end = (core_end / omega).atan();
    let mut head = 0.0;
    let pieces = 16;
    for p in 0..pieces {
        let a = theta_end * p as f64 / pieces as f64;
        let h = theta_end / pieces as f64;
        for (x, w) in inner.nodes.iter().zip(&inner.weights) {
            let th = a + h * x;
            head += h * w * (omega * tau * th.tan()).cos() / omega;
        }
    }
    if tau == 0.0 {
        head += (0.5 * PI - theta_end) / omega;
    } else {
        let mut a = core_end;
        while a < head_end {
            let b = (2.0 * a).min(head_end);
            for (x, w) in inner.nodes.iter().zip(&inner.weights) {
                let k = a + (b - a) * x;
                head += (b - a) * w * (k * tau).cos() / (omega * omega + k * k);
            }
            a = b;
        }
    }
    if tau == 0.0 {
        return 2.0 * head;
    }
    let period = PI / tau;
    let panels = 48;
    let mut partial = Vec::with_capacity(panels);
    let mut sum = head;
    for p in 0..panels {
        let a = head_end + p as f64 * period;
        let mut v = 0.0;
        for (x, w) in inner.nodes.iter().zip(&inner.weights) {
            let k = a + period * x;
            v += period * w * (k * tau).cos() / (omega * omega + k * k);
        }
        sum += v;
        partial.push(sum);
    }
    2.0 * wynn_epsilon(&partial)
}

/// Limit of a sequence of partial sums by Wynn's epsilon algorithm.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = s[n - 1];
    let mut best_diff = f64::INFINITY;
    let mut col = 0;
    while cur.len() > 1 {
        let next: Vec<f64> = (0..cur.len() - 1)
            .map(|i| {
                let d = cur[i + 1] - cur[i];
                prev[i + 1] + if d == 0.0 { f64::INFINITY } else { 1.0 / d }
            })
            .collect();
        col += 1;
        if col % 2 == 0 && next.len() >= 2 {
            let m = next.len();
            let diff = (next[m - 1] - next[m - 2]).abs();
            if diff.is_finite() && diff < best_diff {
                best_diff = diff;
                best = next[m - 1];
            }
        }
        prev = cur;
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        cur = next;
    }
    best
}

impl FieldModel {
    /// `(δ_s⊗g, δ_t⊗f)` computed through the explicit energy-momentum
    /// integral `(1/π) ∫∫ ĝ(k) f̂(k) e^{ik₀(t−s)} / (ω(k)² + k₀²) dk₀ dk`.
    /// Agrees with [`euclid_slice_inner`](Self::euclid_slice_inner) up to
    /// quadrature error; it exists as an independent check.
    pub fn euclid_slice_inner_via_energy(&self, s: f64, g: &FieldFunction, t: f64, f: &FieldFunction) -> Result<f64> {
        let FieldModel::Continuum(c) = self else {
            return Err(Error::ModelValidity("the energy integral is defined for continuum fields".into()));
        };
        let (pg, cg) = c.profile(g)?;
        let (pf, cf) = c.profile(f)?;
        let dist = cf.iter().zip(cg).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let q = &c.quadrature;
        let mut acc = 0.0;
        for (&k, &w) in q.radial_nodes.iter().zip(&q.radial_weights) {
            if w == 0.0 {
                continue;
            }
            let om = c.dispersion.omega(k);
            acc += w
                * c.profile_at(pg, k)
                * c.profile_at(pf, k)
                * q.angular(k * dist)
                * time_kernel_by_quadrature(om, t - s)
                / PI;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FormFactor, QuadratureSpec};

    #[test]
    fn time_kernel_closed_form() {
        for om in [0.3f64, 1.0, 2.5] {
            for tau in [0.0, 1e-3, 0.1, 0.5, 1.0, 2.0] {
                let exact = PI * (-om * tau).exp() / om;
                let v = time_kernel_by_quadrature(om, tau);
                assert!(((v - exact) / exact).abs() < 1e-8, "ω={om} τ={tau}: {v} vs {exact}");
                assert_eq!(v, time_kernel_by_quadrature(om, -tau));
            }
        }
    }

    #[test]
    fn energy_integral_cross_check() {
        let m = FieldModel::continuum(1, 1.0, FormFactor::GaussianCutoff { cutoff: 1.0 }, QuadratureSpec::default())
            .unwrap();
        let g = FieldFunction::form_at(&[0.0]);
        let f = FieldFunction::Gaussian { center: vec![0.5], amplitude: 1.0, width: 1.5 };
        for (s, t) in [(0.0, 0.0), (0.0, 0.3), (1.0, 0.2), (0.0, 1.5)] {
            let a = m.euclid_slice_inner(s, &g, t, &f).unwrap();
            let b = m.euclid_slice_inner_via_energy(s, &g, t, &f).unwrap();
            assert!(((a - b) / a).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
