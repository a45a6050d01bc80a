//! The relativistic Lévy subordinator.
//!
//! `T_t` is the non-decreasing Lévy process with `E[e^{-s T_t}] = e^{-t h(s)}`,
//! where `h(s) = √(s + M²) − M` is a Bernstein function. Matching Laplace
//! transforms shows that an increment over a duration `t` is inverse Gaussian:
//!
//! ```text
//! IG(μ, λ):  E[e^{-sX}] = exp((λ/μ)(1 − √(1 + 2μ²s/λ)))
//! μ = t/(2M), λ = t²/2  ⇒  λ/μ = tM, 2μ²/λ = 1/M²  ⇒  exp(tM − t√(M² + s))
//! ```
//!
//! so increments are drawn exactly rather than by discretising the hitting
//! time representation, which is kept only as an independent reference.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// A Bernstein function vanishing at the origin, i.e. the Laplace exponent of
/// a subordinator.
pub trait Bernstein {
    fn exponent(&self, s: f64) -> f64;
}

/// The relativistic subordinator of a particle with rest mass `mass`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    mass: f64,
}

/// One sampled increment `ΔT` of the subordinator over `duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorIncrement {
    pub duration: f64,
    pub value: f64,
}

impl SubordinatorSpec {
    pub fn new(mass: f64) -> Result<Self> {
        ensure!(mass > 0.0 && mass.is_finite(), Domain, "particle mass must be positive and finite, got {mass}");
        Ok(Self { mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `h(s) = √(s + M²) − M`.
    pub fn laplace_exponent(&self, s: f64) -> Result<f64> {
        ensure!(s >= 0.0, Domain, "Laplace exponent needs s ≥ 0, got {s}");
        Ok(self.exponent(s))
    }

    /// Inverse-Gaussian law of an increment over `duration`.
    pub fn increment_law(&self, duration: f64) -> Result<InverseGaussian> {
        ensure!(duration > 0.0 && duration.is_finite(), Domain, "increment duration must be positive, got {duration}");
        Ok(InverseGaussian { mean: duration / (2.0 * self.mass), shape: 0.5 * duration * duration })
    }

    pub fn sample_increment<R: Rng + ?Sized>(&self, duration: f64, rng: &mut R) -> Result<SubordinatorIncrement> {
        let law = self.increment_law(duration)?;
        Ok(SubordinatorIncrement { duration, value: law.sample(rng) })
    }
}

impl Bernstein for SubordinatorSpec {
    fn exponent(&self, s: f64) -> f64 {
        // √(s+M²) − M = s / (√(s+M²) + M), without cancellation for small s
        s / ((s + self.mass * self.mass).sqrt() + self.mass)
    }
}

/// Inverse Gaussian distribution with the given mean and shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGaussian {
    pub mean: f64,
    pub shape: f64,
}

impl InverseGaussian {
    /// Transformation with one rejection step: one normal and one uniform
    /// draw per sample.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mu = self.mean;
        let lambda = self.shape;
        let v: f64 = rng.sample(StandardNormal);
        let y = v * v;
        // smaller root of λ(x−μ)² = μ²xy, written to avoid cancellation
        let root = (4.0 * mu * lambda * y + mu * mu * y * y).sqrt();
        let x = mu - 2.0 * mu * mu * y / (mu * y + root);
        let u: f64 = rng.random();
        if u * (mu + x) <= mu {
            x
        } else {
            mu * mu / x
        }
    }
}

/// Half the first time the drifted Brownian motion `B_s + M s` (unit variance
/// rate) reaches level `t`, simulated with steps of size `step`.
///
/// Crossings between grid points are detected with the Brownian-bridge
/// crossing probability; the crossing time is then placed at the middle of
/// the step.
pub fn hitting_time_reference<R: Rng + ?Sized>(t: f64, spec: &SubordinatorSpec, step: f64, rng: &mut R) -> Result<f64> {
    ensure!(t > 0.0, Domain, "level must be positive, got {t}");
    ensure!(step > 0.0, Domain, "step must be positive, got {step}");
    let m = spec.mass();
    ensure!(step < t / m, Config, "step {step} is too coarse to resolve a crossing of level {t} at drift {m}");
    let sd = step.sqrt();
    let drift = m * step;
    let mut s = 0.0;
    let mut y = 0.0;
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let next = y + drift + sd * z;
        let crossed = if next >= t {
            true
        } else {
            let p = (-2.0 * (t - y) * (t - next) / step).exp();
            rng.random::<f64>() < p
        };
        if crossed {
            return Ok(0.5 * (s + 0.5 * step));
        }
        s += step;
        y = next;
    }
}

/// Sample mean and standard error of `e^{-s T_t}` over `n_samples` draws.
pub fn empirical_laplace_check<R: Rng + ?Sized>(
    t: f64,
    s: f64,
    spec: &SubordinatorSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    ensure!(s >= 0.0, Domain, "Laplace variable must be non-negative, got {s}");
    ensure!(n_samples >= 100, Config, "need at least 100 samples, got {n_samples}");
    let law = spec.increment_law(t)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let v = (-s * law.sample(rng)).exp();
        sum += v;
        sum_sq += v * v;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
