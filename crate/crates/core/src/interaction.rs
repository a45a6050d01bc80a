//! The polynomial self-interaction `P(λ) = Σ_{j=1}^{2n} c_j λ^j` and the
//! field expectation of `e^{-κP}` conditional on a particle path.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::field::{eval_terms, CylinderPolynomial, EndpointCovariance, GaussianSampler};
use crate::quadrature::{hermite, GaussRule, MAX_HERMITE_ORDER};

/// Default Gauss–Hermite order.
pub const DEFAULT_ORDER: usize = 64;

/// Relative change under order doubling below which the rule is accepted.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// `P` together with the coupling constant `κ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialInteraction {
    /// `c_1, …, c_{2n}`; there is no constant term.
    pub coefficients: Vec<f64>,
    pub coupling: f64,
    /// Accept `κ < 0`. The expectation then diverges and results are a
    /// fixed-order quadrature flagged as formal.
    #[serde(default)]
    pub allow_negative_coupling: bool,
}

impl PolynomialInteraction {
    pub fn new(coefficients: Vec<f64>, coupling: f64) -> Result<Self> {
        let p = Self { coefficients, coupling, allow_negative_coupling: false };
        p.validate()?;
        Ok(p)
    }

    /// `κ λ^power`.
    pub fn monomial(power: usize, coupling: f64) -> Result<Self> {
        let mut c = vec![0.0; power];
        if power > 0 {
            c[power - 1] = 1.0;
        }
        Self::new(c, coupling)
    }

    pub fn validate(&self) -> Result<()> {
        let deg = self.coefficients.len();
        ensure!(deg >= 2 && deg % 2 == 0, ModelValidity, "P must have even degree 2n ≥ 2, got {deg}");
        ensure!(self.coefficients.iter().all(|c| c.is_finite()), ModelValidity, "P has non-finite coefficients");
        ensure!(
            self.leading() > 0.0,
            ModelValidity,
            "leading coefficient of P must be positive, got {}",
            self.leading()
        );
        ensure!(self.coupling.is_finite(), ModelValidity, "coupling must be finite");
        if self.coupling < 0.0 && !self.allow_negative_coupling {
            return Err(Error::Integrability(format!(
                "κ = {} < 0 makes E[e^{{-κP}}] diverge; pass the negative-coupling override to compute a formal value",
                self.coupling
            )));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    pub fn leading(&self) -> f64 {
        *self.coefficients.last().unwrap_or(&0.0)
    }

    /// `P(λ)` by Horner's rule.
    #[inline]
    pub fn eval(&self, lambda: f64) -> f64 {
        lambda * self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * lambda + c)
    }

    pub fn is_formal(&self) -> bool {
        self.coupling < 0.0
    }
}

/// `E[e^{-κP(G)}]`, `G ~ N(0, σ²)`, by Gauss–Hermite quadrature with order
/// doubling from `order`.
pub fn conditional_weight_vacuum(sigma2: f64, p: &PolynomialInteraction, order: usize) -> Result<f64> {
    Ok(VacuumWeight::new(p, order)?.eval(sigma2)?.value)
}

/// A conditional weight and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightValue {
    pub value: f64,
    pub order: usize,
    pub converged: bool,
    pub formal: bool,
}

/// Reusable evaluator of [`conditional_weight_vacuum`].
///
/// The integration variable is rescaled so that the Gaussian density times
/// the leading term of `e^{-κP}` is matched by the Hermite weight; for
/// quadratic `P` the rescaled integrand is constant and every order is exact.
#[derive(Debug, Clone)]
pub struct VacuumWeight {
    p: PolynomialInteraction,
    rules: Vec<Arc<GaussRule>>,
}

impl VacuumWeight {
    pub fn new(p: &PolynomialInteraction, order: usize) -> Result<Self> {
        p.validate()?;
        ensure!(
            (2..=MAX_HERMITE_ORDER).contains(&order),
            Config,
            "quadrature order must lie in 2..={MAX_HERMITE_ORDER}"
        );
        let mut rules = vec![hermite(order)];
        let mut q = order;
        while !p.is_formal() && q * 2 <= MAX_HERMITE_ORDER {
            q *= 2;
            rules.push(hermite(q));
        }
        Ok(Self { p: p.clone(), rules })
    }

    pub fn interaction(&self) -> &PolynomialInteraction {
        &self.p
    }

    pub fn eval(&self, sigma2: f64) -> Result<WeightValue> {
        ensure!(sigma2 >= 0.0 && sigma2.is_finite(), Domain, "variance must be finite and non-negative, got {sigma2}");
        let p = &self.p;
        let formal = p.is_formal();
        if sigma2 == 0.0 || p.coupling == 0.0 {
            return Ok(WeightValue { value: 1.0, order: 0, converged: true, formal });
        }
        let n = p.degree() / 2;
        let lead = if formal { 0.0 } else { (p.coupling * p.leading()).powf(1.0 / n as f64) };
        let inv_s2 = 0.5 / sigma2 + lead;
        let s = inv_s2.recip().sqrt();
        let prefactor = s / (2.0 * PI * sigma2).sqrt();
        let shift = 1.0 - 0.5 * s * s / sigma2;
        let integrate = |rule: &GaussRule| -> f64 {
            prefactor
                * rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&x, &w)| w * (x * x * shift - p.coupling * p.eval(s * x)).exp())
                    .sum::<f64>()
        };
        let mut prev = integrate(&self.rules[0]);
        if formal {
            return Ok(WeightValue { value: prev, order: self.rules[0].len(), converged: false, formal });
        }
        for rule in &self.rules[1..] {
            let next = integrate(rule);
            if (next - prev).abs() <= CONVERGENCE_TOL * next.abs() {
                return Ok(WeightValue { value: next, order: rule.len(), converged: true, formal });
            }
            prev = next;
        }
        let order = self.rules.last().map_or(0, |r| r.len());
        log::warn!("Gauss–Hermite weight not converged at order {order} for σ² = {sigma2}");
        Ok(WeightValue { value: prev, order, converged: false, formal })
    }
}

/// `E[L(Y_left) R(Y_right) e^{-κP(Φ)}]` for the Gaussian vector described by
/// `cov`, by `n_inner` joint draws. Constant states reduce to
/// [`conditional_weight_vacuum`].
pub fn conditional_weight_with_observables<R: Rng + ?Sized>(
    cov: &EndpointCovariance,
    left: &CylinderPolynomial,
    right: &CylinderPolynomial,
    weight: &VacuumWeight,
    n_inner: usize,
    rng: &mut R,
) -> Result<f64> {
    if left.is_zero() || right.is_zero() {
        return Ok(0.0);
    }
    if let (Some(a), Some(b)) = (left.constant_value(), right.constant_value()) {
        return Ok(a * b * weight.eval(cov.path_variance())?.value);
    }
    ensure!(n_inner >= 1, Config, "n_inner must be at least 1");
    ensure!(
        left.functions.len() == cov.n_left && right.functions.len() == cov.n_right,
        Domain,
        "endpoint covariance does not match the state functions"
    );
    let m = &cov.matrix;
    let nl = cov.n_left;
    let lt = left.expand(0, &|a, b| m[(a, b)]);
    let rt = right.expand(nl, &|a, b| m[(nl + a, nl + b)]);
    let sampler = GaussianSampler::new(m)?;
    let p = weight.interaction();
    let last = cov.path_index();
    let mut y = vec![0.0; m.nrows()];
    let mut acc = 0.0;
    for _ in 0..n_inner {
        sampler.sample(rng, &mut y);
        acc += eval_terms(&lt, &y) * eval_terms(&rt, &y) * (-p.coupling * p.eval(y[last])).exp();
    }
    Ok(acc / n_inner as f64)
}
