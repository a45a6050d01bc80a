//! Gaussian field structure: the one-particle pairing weighted by `1/ω`,
//! its Euclidean time-slice extension, and the covariances of linear field
//! functionals along a particle path.
//!
//! Every field variable `φ(f)` is centred Gaussian with
//! `Cov(φ(f), φ(g)) = ½ (f, g)`, and equal-time slices of the Euclidean field
//! satisfy `Cov(φ(δ_s⊗g), φ(δ_t⊗f)) = ½ (g, e^{-|t−s|ω} f)`.
//!
//! Two model variants are supported. [`ContinuumField`] has a dispersion
//! `ω(k) = √(|k|² + m²)` and a translation-covariant form factor
//! `ρ̂_x(k) = ρ̂(k) e^{ik·x}`; all momentum integrals reduce to a radial
//! quadrature. [`SingleModeModel`] keeps one normalised mode `e` with
//! frequency `ω₀` and couples the particle through `ρ_x = c(x) e`.

mod covariance;
mod cylinder;
mod euclid;
mod gaussian;
mod wick;

pub use covariance::EndpointCovariance;
pub use cylinder::{eval_terms, CylinderPolynomial, Monomial};
pub use euclid::time_kernel_by_quadrature;
pub use gaussian::GaussianSampler;
pub use wick::{isserlis_moment, wick_expand, wick_moment};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::GaussRule;

/// `ω(k) = √(|k|² + m²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub mass: f64,
}

impl Dispersion {
    pub fn new(mass: f64) -> Result<Self> {
        ensure!(mass >= 0.0 && mass.is_finite(), Domain, "field mass must be finite and non-negative, got {mass}");
        Ok(Self { mass })
    }

    #[inline]
    pub fn omega(&self, k: f64) -> f64 {
        (k * k + self.mass * self.mass).sqrt()
    }
}

/// Radial profile `ρ̂(|k|)` of the ultraviolet cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormFactor {
    /// `exp(−|k|² / (2Λ²))`
    GaussianCutoff { cutoff: f64 },
    /// `1` for `|k| ≤ Λ`
    SharpCutoff { cutoff: f64 },
}

impl FormFactor {
    #[inline]
    pub fn eval(&self, k: f64) -> f64 {
        match *self {
            FormFactor::GaussianCutoff { cutoff } => (-0.5 * k * k / (cutoff * cutoff)).exp(),
            FormFactor::SharpCutoff { cutoff } => {
                if k <= cutoff {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cutoff(&self) -> f64 {
        match *self {
            FormFactor::GaussianCutoff { cutoff } | FormFactor::SharpCutoff { cutoff } => cutoff,
        }
    }
}

/// Resolution of the momentum quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Radial nodes (the full symmetric line in one dimension has twice as many).
    pub radial_nodes: usize,
    /// Truncation radius in units of the cutoff, for smooth form factors.
    pub radius_factor: f64,
    /// Polar nodes per hemisphere for the three-dimensional vector rule.
    pub polar_nodes: usize,
    /// Radial nodes of the three-dimensional vector rule.
    pub vector_radial_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { radial_nodes: 256, radius_factor: 8.0, polar_nodes: 8, vector_radial_nodes: 48 }
    }
}

impl QuadratureSpec {
    /// Same rule with every node count doubled.
    pub fn doubled(&self) -> Self {
        Self {
            radial_nodes: 2 * self.radial_nodes,
            polar_nodes: 2 * self.polar_nodes,
            vector_radial_nodes: 2 * self.vector_radial_nodes,
            ..*self
        }
    }
}

/// Momentum nodes and weights.
///
/// `radial` integrates radial functions over `R^d` (the weights carry the
/// `d`-dimensional measure). `vectors` integrates functions that are even
/// under `k → −k` and are only needed for the path recursion: only one
/// half-space is stored and its weights are doubled.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumQuadrature {
    pub dim: usize,
    pub radius: f64,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub vector_nodes: Vec<[f64; 3]>,
    pub vector_weights: Vec<f64>,
}

impl MomentumQuadrature {
    pub fn new(dim: usize, form: &FormFactor, spec: &QuadratureSpec) -> Result<Self> {
        ensure!(
            dim == 1 || dim == 3,
            ModelValidity,
            "continuum fields are supported in one and three dimensions, got {dim}"
        );
        ensure!(spec.radial_nodes >= 4, Config, "need at least 4 radial momentum nodes");
        let (radius, smooth) = match *form {
            FormFactor::GaussianCutoff { cutoff } => (spec.radius_factor * cutoff, true),
            FormFactor::SharpCutoff { cutoff } => (cutoff, false),
        };
        ensure!(radius > 0.0 && radius.is_finite(), ModelValidity, "form factor cutoff must be positive");
        let (radial_nodes, radial_weights) = if dim == 1 {
            if smooth {
                // symmetric trapezoid on [−K, K], folded onto [0, K]
                let j = spec.radial_nodes;
                let h = radius / j as f64;
                let nodes: Vec<f64> = (0..=j).map(|i| i as f64 * h).collect();
                let weights: Vec<f64> = (0..=j).map(|i| if i == 0 || i == j { h } else { 2.0 * h }).collect();
                (nodes, weights)
            } else {
                let r = GaussRule::legendre(spec.radial_nodes, 0.0, radius);
                (r.nodes, r.weights.iter().map(|w| 2.0 * w).collect())
            }
        } else {
            let r = GaussRule::legendre(spec.radial_nodes, 0.0, radius);
            let w = r.nodes.iter().zip(&r.weights).map(|(k, w)| 4.0 * std::f64::consts::PI * k * k * w).collect();
            (r.nodes, w)
        };

        let (vector_nodes, vector_weights) = if dim == 1 {
            (radial_nodes.iter().map(|&k| [k, 0.0, 0.0]).collect(), radial_weights.clone())
        } else {
            let radial = GaussRule::legendre(spec.vector_radial_nodes, 0.0, radius);
            let polar = GaussRule::legendre(spec.polar_nodes, 0.0, 1.0);
            let n_az = 2 * spec.polar_nodes;
            let d_az = 2.0 * std::f64::consts::PI / n_az as f64;
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for (&k, &wk) in radial.nodes.iter().zip(&radial.weights) {
                for (&c, &wc) in polar.nodes.iter().zip(&polar.weights) {
                    let s = (1.0 - c * c).sqrt();
                    for a in 0..n_az {
                        let phi = (a as f64 + 0.5) * d_az;
                        nodes.push([k * s * phi.cos(), k * s * phi.sin(), k * c]);
                        weights.push(2.0 * k * k * wk * wc * d_az);
                    }
                }
            }
            (nodes, weights)
        };
        Ok(Self { dim, radius, radial_nodes, radial_weights, vector_nodes, vector_weights })
    }

    /// Angular average of `e^{ik·r}` over directions of `k` at fixed `|k|`.
    #[inline]
    pub(crate) fn angular(&self, kr: f64) -> f64 {
        if self.dim == 1 {
            kr.cos()
        } else if kr.abs() < 1e-6 {
            1.0 - kr * kr / 6.0
        } else {
            kr.sin() / kr
        }
    }
}

/// A real test function in the one-particle space, given through its
/// Fourier transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldFunction {
    /// `amplitude · ρ_center`; in the single-mode model `amplitude · c(center) e`.
    Form { center: Vec<f64>, amplitude: f64 },
    /// `ĥ(k) = amplitude · exp(−|k|²/(2 width²)) e^{ik·center}`.
    Gaussian { center: Vec<f64>, amplitude: f64, width: f64 },
    /// `amplitude · e`, single-mode model only.
    Mode { amplitude: f64 },
}

impl FieldFunction {
    pub fn form_at(x: &[f64]) -> Self {
        FieldFunction::Form { center: x.to_vec(), amplitude: 1.0 }
    }
}

/// The particle's coupling profile in the single-mode model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coupling {
    Constant {
        value: f64,
    },
    /// `amplitude · exp(−|x − center|² / scale²)`.
    Gaussian {
        amplitude: f64,
        scale: f64,
        center: Vec<f64>,
    },
}

impl Coupling {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Coupling::Constant { value } => *value,
            Coupling::Gaussian { amplitude, scale, center } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                amplitude * (-r2 / (scale * scale)).exp()
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Coupling::Constant { value } => value.abs(),
            Coupling::Gaussian { amplitude, .. } => amplitude.abs(),
        }
    }
}

/// One field mode of frequency `ω₀` coupled to the particle through `c(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleModeModel {
    pub omega0: f64,
    pub coupling: Coupling,
}

/// A scalar field with a continuous momentum variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumField {
    pub dispersion: Dispersion,
    pub form: FormFactor,
    pub quadrature: MomentumQuadrature,
    quad_spec: QuadratureSpec,
    form_norm_sq: f64,
    /// `w_i |ρ̂(k_i)|² / ω(k_i)` on the radial nodes.
    radial_kernel: Vec<f64>,
    radial_omega: Vec<f64>,
    /// `w_i / ω(k_i)`, `ρ̂(k_i)` and `ω(k_i)` on the vector nodes.
    pub(crate) vector_base: Vec<f64>,
    pub(crate) vector_rho: Vec<f64>,
    pub(crate) vector_omega: Vec<f64>,
}

impl ContinuumField {
    pub fn new(dim: usize, dispersion: Dispersion, form: FormFactor, spec: QuadratureSpec) -> Result<Self> {
        let quadrature = MomentumQuadrature::new(dim, &form, &spec)?;
        if dispersion.mass == 0.0 && dim == 1 && form.eval(0.0) != 0.0 {
            return Err(Error::ModelValidity(
                "massless field in one dimension: ∫|ρ̂|²/ω diverges at k = 0 unless ρ̂(0) = 0".into(),
            ));
        }
        let radial_omega: Vec<f64> = quadrature.radial_nodes.iter().map(|&k| dispersion.omega(k)).collect();
        let radial_kernel: Vec<f64> = quadrature
            .radial_nodes
            .iter()
            .zip(&quadrature.radial_weights)
            .zip(&radial_omega)
            .map(|((&k, &w), &om)| if w == 0.0 { 0.0 } else { w * form.eval(k).powi(2) / om })
            .collect();
        let vector_omega: Vec<f64> = quadrature.vector_nodes.iter().map(|k| dispersion.omega(norm3(k))).collect();
        let vector_base = quadrature.vector_weights.iter().zip(&vector_omega).map(|(w, om)| w / om).collect();
        let vector_rho = quadrature.vector_nodes.iter().map(|k| form.eval(norm3(k))).collect();
        let form_norm_sq: f64 = radial_kernel.iter().sum();
        ensure!(
            form_norm_sq.is_finite() && form_norm_sq > 0.0,
            ModelValidity,
            "form factor has norm² {form_norm_sq} in the one-particle space"
        );
        Ok(Self {
            dispersion,
            form,
            quadrature,
            quad_spec: spec,
            form_norm_sq,
            radial_kernel,
            radial_omega,
            vector_base,
            vector_rho,
            vector_omega,
        })
    }

    pub fn dim(&self) -> usize {
        self.quadrature.dim
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        self.quad_spec
    }

    /// `‖ρ_x‖²`, the same for every `x`.
    pub fn form_norm_sq(&self) -> f64 {
        self.form_norm_sq
    }

    /// `W(r, τ) = ½ ∫ |ρ̂(k)|² cos(k·r) e^{-|τ|ω(k)} / ω(k) dk`.
    pub fn pair_covariance(&self, r: &[f64], tau: f64) -> f64 {
        let dist = norm(r);
        let tau = tau.abs();
        0.5 * self
            .quadrature
            .radial_nodes
            .iter()
            .zip(&self.radial_kernel)
            .zip(&self.radial_omega)
            .map(|((&k, &kern), &om)| kern * self.quadrature.angular(k * dist) * (-tau * om).exp())
            .sum::<f64>()
    }

    /// Radial profile `|f̂(k)|` and phase center of a field function.
    pub(crate) fn profile<'a>(&self, f: &'a FieldFunction) -> Result<(Profile, &'a [f64])> {
        let (p, c) = match f {
            FieldFunction::Form { center, amplitude } => (Profile::Form(*amplitude), center),
            FieldFunction::Gaussian { center, amplitude, width } => {
                ensure!(*width > 0.0, Domain, "gaussian field function needs a positive width");
                (Profile::Gaussian(*amplitude, *width), center)
            }
            FieldFunction::Mode { .. } => {
                return Err(Error::ModelValidity(
                    "the single-mode function e is not defined for a continuum field".into(),
                ))
            }
        };
        ensure!(c.len() == self.dim(), Domain, "field function center must have dimension {}", self.dim());
        Ok((p, c.as_slice()))
    }

    #[inline]
    pub(crate) fn profile_at(&self, p: Profile, k: f64) -> f64 {
        match p {
            Profile::Form(a) => a * self.form.eval(k),
            Profile::Gaussian(a, w) => a * (-0.5 * k * k / (w * w)).exp(),
        }
    }

    /// `(g, e^{-|τ|ω} f)` via the radial rule.
    fn inner(&self, g: &FieldFunction, f: &FieldFunction, tau: f64) -> Result<f64> {
        let (pg, cg) = self.profile(g)?;
        let (pf, cf) = self.profile(f)?;
        let r: Vec<f64> = cf.iter().zip(cg).map(|(a, b)| a - b).collect();
        let dist = norm(&r);
        let tau = tau.abs();
        let q = &self.quadrature;
        let mut acc = 0.0;
        for ((&k, &w), &om) in q.radial_nodes.iter().zip(&q.radial_weights).zip(&self.radial_omega) {
            if w == 0.0 {
                continue;
            }
            acc += w * self.profile_at(pg, k) * self.profile_at(pf, k) * q.angular(k * dist) * (-tau * om).exp() / om;
        }
        Ok(acc)
    }

    /// `‖f‖²` under this quadrature and under one with doubled nodes.
    pub fn norm_sq_convergence(&self, f: &FieldFunction) -> Result<(f64, f64)> {
        let fine = ContinuumField::new(self.dim(), self.dispersion, self.form, self.quad_spec.doubled())?;
        Ok((self.inner(f, f, 0.0)?, fine.inner(f, f, 0.0)?))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Profile {
    Form(f64),
    Gaussian(f64, f64),
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn norm3(k: &[f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// Either field model variant.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum FieldModel {
    Continuum(ContinuumField),
    SingleMode(SingleModeModel),
}

impl FieldModel {
    pub fn continuum(dim: usize, field_mass: f64, form: FormFactor, spec: QuadratureSpec) -> Result<Self> {
        Ok(FieldModel::Continuum(ContinuumField::new(dim, Dispersion::new(field_mass)?, form, spec)?))
    }

    pub fn single_mode(omega0: f64, coupling: Coupling) -> Result<Self> {
        ensure!(omega0 > 0.0 && omega0.is_finite(), ModelValidity, "mode frequency must be positive, got {omega0}");
        ensure!(coupling.sup().is_finite(), ModelValidity, "coupling must be bounded");
        if let Coupling::Gaussian { scale, .. } = &coupling {
            ensure!(*scale > 0.0, ModelValidity, "coupling scale must be positive");
        }
        Ok(FieldModel::SingleMode(SingleModeModel { omega0, coupling }))
    }

    /// Checks the model against the particle dimension.
    pub fn validate_for(&self, dim: usize) -> Result<()> {
        match self {
            FieldModel::Continuum(c) => {
                ensure!(c.dim() == dim, ModelValidity, "field dimension {} ≠ particle dimension {dim}", c.dim())
            }
            FieldModel::SingleMode(s) => {
                if let Coupling::Gaussian { center, .. } = &s.coupling {
                    ensure!(center.len() == dim, ModelValidity, "coupling center must have dimension {dim}");
                }
            }
        }
        Ok(())
    }

    /// `(g, f)` in the one-particle space.
    pub fn bos_inner(&self, g: &FieldFunction, f: &FieldFunction) -> Result<f64> {
        self.slice_inner(g, f, 0.0)
    }

    /// `(δ_s⊗g, δ_t⊗f)` in the Euclidean space, defined as
    /// `(g, e^{-|t−s|ω} f)`. At `s = t` this is [`bos_inner`](Self::bos_inner)
    /// exactly.
    pub fn euclid_slice_inner(&self, s: f64, g: &FieldFunction, t: f64, f: &FieldFunction) -> Result<f64> {
        self.slice_inner(g, f, t - s)
    }

    fn slice_inner(&self, g: &FieldFunction, f: &FieldFunction, tau: f64) -> Result<f64> {
        match self {
            FieldModel::Continuum(c) => c.inner(g, f, tau),
            FieldModel::SingleMode(m) => {
                let a = self.mode_amplitude(m, g)?;
                let b = self.mode_amplitude(m, f)?;
                Ok(a * b * (-tau.abs() * m.omega0).exp())
            }
        }
    }

    fn mode_amplitude(&self, m: &SingleModeModel, f: &FieldFunction) -> Result<f64> {
        match f {
            FieldFunction::Mode { amplitude } => Ok(*amplitude),
            FieldFunction::Form { center, amplitude } => Ok(amplitude * m.coupling.eval(center)),
            FieldFunction::Gaussian { .. } => {
                Err(Error::ModelValidity("gaussian test functions need a continuum field".into()))
            }
        }
    }

    /// `Cov(φ(δ_0⊗ρ_x), φ(δ_τ⊗ρ_y))`.
    pub fn covariance(&self, x: &[f64], y: &[f64], tau: f64) -> f64 {
        match self {
            FieldModel::Continuum(c) => {
                let r: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                c.pair_covariance(&r, tau)
            }
            FieldModel::SingleMode(m) => 0.5 * m.coupling.eval(x) * m.coupling.eval(y) * (-tau.abs() * m.omega0).exp(),
        }
    }

    /// Upper bound of `|covariance|`: `½ sup_x ‖ρ_x‖²`.
    pub fn max_covariance(&self) -> f64 {
        match self {
            FieldModel::Continuum(c) => 0.5 * c.form_norm_sq(),
            FieldModel::SingleMode(m) => 0.5 * m.coupling.sup().powi(2),
        }
    }
}
