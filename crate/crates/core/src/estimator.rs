//! Monte Carlo pipelines for the coupled particle–field system: matrix
//! elements of `e^{-tH_κ}`, multi-time field insertions, the field alone with
//! a potential, and ground-energy extraction.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::field::{eval_terms, CylinderPolynomial, FieldFunction, FieldModel, GaussianSampler};
use crate::functions::{PotentialSpec, ScalarFunction, TestFunction};
use crate::interaction::{conditional_weight_with_observables, PolynomialInteraction, VacuumWeight, DEFAULT_ORDER};
use crate::particle::{action_integral, ParticlePath, PathPlan, SamplingConfig, TimeGrid};
use crate::stats::{run_batches, EstimateResult};
use crate::subordinator::SubordinatorSpec;

/// A vector of the dense domain: a particle wave function times a cylinder
/// polynomial of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub particle: TestFunction,
    #[serde(default)]
    pub field: CylinderPolynomial,
}

impl StateSpec {
    pub fn vacuum(particle: TestFunction) -> Self {
        Self { particle, field: CylinderPolynomial::vacuum() }
    }

    pub fn validate(&self, dim: usize, max_degree: usize) -> Result<()> {
        self.particle.validate(dim)?;
        self.field.validate(max_degree)
    }

    pub fn is_zero(&self) -> bool {
        self.particle.is_zero() || self.field.is_zero()
    }

    fn has_vacuum_field(&self) -> bool {
        self.field.constant_value().is_some()
    }
}

/// Everything that defines `H_κ`.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub dim: usize,
    pub particle: SubordinatorSpec,
    pub potential: PotentialSpec,
    pub field: FieldModel,
    pub interaction: PolynomialInteraction,
}

impl CoupledModel {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.dim >= 1, Config, "dimension must be at least 1");
        self.potential.validate(self.dim)?;
        self.field.validate_for(self.dim)?;
        self.interaction.validate()
    }
}

/// How the interaction enters the per-path weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightForm {
    /// `e^{-κP(Φ)}` with `Φ = Σ_j Δ_j φ(δ_{t_j}⊗ρ_{X_j})`, integrated over the
    /// field analytically.
    #[default]
    Smeared,
    /// `e^{-κ Σ_j Δ_j P(φ(δ_{t_j}⊗ρ_{X_j}))}` with the field sampled along
    /// the path; the Trotter limit of `e^{-tH_0}`, `e^{-tκH_I}` alternation.
    TimeLocal,
}

/// Estimator knobs beyond the sampling layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    #[serde(flatten)]
    pub sampling: SamplingConfig,
    pub hermite_order: usize,
    /// Field draws per path for non-vacuum states and insertions.
    pub n_inner: usize,
    pub max_field_degree: usize,
    pub weight_form: WeightForm,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            sampling: SamplingConfig::default(),
            hermite_order: DEFAULT_ORDER,
            n_inner: 16,
            max_field_degree: 8,
            weight_form: WeightForm::Smeared,
        }
    }
}

fn exact_zero(cfg: &SamplingConfig) -> Result<EstimateResult> {
    let layout = cfg.layout()?;
    Ok(EstimateResult::from_batch_means(&vec![0.0; layout.batches], cfg.seed, layout))
}

/// `(Φ, e^{-tH_κ} Ψ)`.
pub fn matrix_element(
    phi: &StateSpec,
    psi: &StateSpec,
    model: &CoupledModel,
    t: f64,
    params: &EstimatorConfig,
) -> Result<EstimateResult> {
    model.validate()?;
    ensure!(t >= 0.0 && t.is_finite(), Domain, "horizon must be finite and non-negative");
    phi.validate(model.dim, params.max_field_degree)?;
    psi.validate(model.dim, params.max_field_degree)?;
    let cfg = &params.sampling;
    if phi.is_zero() || psi.is_zero() {
        cfg.validate()?;
        return exact_zero(cfg);
    }
    let vacuum = phi.has_vacuum_field() && psi.has_vacuum_field();
    if params.weight_form == WeightForm::TimeLocal {
        ensure!(vacuum, Config, "time-local weights support vacuum field states only");
    }
    let grid = TimeGrid::uniform(t, cfg.steps_for(t))?;
    let plan = PathPlan::new(model.dim, &phi.particle, &model.particle, grid, cfg)?;
    let weight = VacuumWeight::new(&model.interaction, params.hermite_order)?;
    let (f, g) = (&phi.particle, &psi.particle);
    let scale = phi.field.constant_value().unwrap_or(1.0) * psi.field.constant_value().unwrap_or(1.0);
    let est = run_batches(cfg.seed, cfg.layout()?, 1, |streams, out, diag| {
        let mut buf = ParticlePath::empty(model.dim, plan.sampler.grid());
        let (path, inv_q) = plan.draw(&mut streams.particle, &mut buf);
        let w = f.eval(path.start()) * inv_q * g.eval(path.end());
        let particle = if w == 0.0 { 0.0 } else { w * (-action_integral(&path, &model.potential)).exp() };
        let field = if vacuum {
            match params.weight_form {
                WeightForm::Smeared => {
                    let v = weight.eval(model.field.path_variance(&path)?)?;
                    if !v.converged && !v.formal {
                        diag.unconverged += 1;
                    }
                    scale * v.value
                }
                WeightForm::TimeLocal => {
                    scale * time_local_weight(&model.field, &model.interaction, &path, &mut streams.field)
                }
            }
        } else {
            let cov = model.field.endpoint_covariance(&path, &phi.field.functions, &psi.field.functions)?;
            conditional_weight_with_observables(
                &cov,
                &phi.field,
                &psi.field,
                &weight,
                params.n_inner,
                &mut streams.inner,
            )?
        };
        diag.record(field);
        out[0] = particle * field;
        Ok(())
    })?;
    Ok(est.into_iter().next().unwrap())
}

/// `exp(−κ Σ_j Δ_j P(φ_j))` for one draw of the field along `path`.
fn time_local_weight<R: Rng + ?Sized>(
    field: &FieldModel,
    p: &PolynomialInteraction,
    path: &ParticlePath,
    rng: &mut R,
) -> f64 {
    let times = path.times();
    let n = times.len();
    if n < 2 || p.coupling == 0.0 {
        return 1.0;
    }
    let mut exponent = 0.0;
    match field {
        FieldModel::SingleMode(m) => {
            let mut q = (0.5f64).sqrt() * rng.sample::<f64, _>(StandardNormal);
            for j in 0..n - 1 {
                if j > 0 {
                    let r = (-(times[j] - times[j - 1]) * m.omega0).exp();
                    q = r * q + (0.5 * (1.0 - r * r)).sqrt() * rng.sample::<f64, _>(StandardNormal);
                }
                let phi = m.coupling.eval(path.position(j)) * q;
                exponent += (times[j + 1] - times[j]) * p.eval(phi);
            }
        }
        FieldModel::Continuum(c) => {
            let nodes = &c.quadrature.vector_nodes;
            let amp: Vec<f64> = (0..nodes.len()).map(|i| (0.5 * c.vector_base[i]).sqrt() * c.vector_rho[i]).collect();
            let mut a: Vec<f64> = (0..nodes.len()).map(|_| rng.sample(StandardNormal)).collect();
            let mut b: Vec<f64> = (0..nodes.len()).map(|_| rng.sample(StandardNormal)).collect();
            let dim = c.dim();
            for j in 0..n - 1 {
                if j > 0 {
                    let gap = times[j] - times[j - 1];
                    for i in 0..nodes.len() {
                        let r = (-gap * c.vector_omega[i]).exp();
                        let s = (1.0 - r * r).sqrt();
                        a[i] = r * a[i] + s * rng.sample::<f64, _>(StandardNormal);
                        b[i] = r * b[i] + s * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                let x = path.position(j);
                let phi: f64 = (0..nodes.len())
                    .map(|i| {
                        let ph: f64 = (0..dim).map(|d| nodes[i][d] * x[d]).sum();
                        let (sn, cs) = ph.sin_cos();
                        amp[i] * (a[i] * cs + b[i] * sn)
                    })
                    .sum();
                exponent += (times[j + 1] - times[j]) * p.eval(phi);
            }
        }
    }
    (-p.coupling * exponent).exp()
}

/// `(Φ, e^{-t_1 H_0} G_1(φ(ρ_x)) e^{-(t_2 − t_1) H_0} ⋯ G_{n−1}(φ(ρ_x)) e^{-(t − t_{n−1}) H_0} Ψ)`
/// for the uncoupled Hamiltonian `H_0`, with field insertions evaluated at
/// the particle's position.
pub fn n_point_insertions(
    phi: &StateSpec,
    psi: &StateSpec,
    model: &CoupledModel,
    insertions: &[(f64, ScalarFunction)],
    t: f64,
    params: &EstimatorConfig,
) -> Result<EstimateResult> {
    model.validate()?;
    phi.validate(model.dim, params.max_field_degree)?;
    psi.validate(model.dim, params.max_field_degree)?;
    ensure!(params.n_inner >= 1, Config, "n_inner must be at least 1");
    let cfg = &params.sampling;
    if phi.is_zero() || psi.is_zero() {
        cfg.validate()?;
        return exact_zero(cfg);
    }
    let marks: Vec<f64> = insertions.iter().map(|(s, _)| *s).collect();
    let grid = TimeGrid::with_marks(t, cfg.steps_for(t), &marks)?;
    let at: Vec<usize> = marks.iter().map(|&s| grid.index_of(s)).collect();
    let plan = PathPlan::new(model.dim, &phi.particle, &model.particle, grid, cfg)?;
    let (f, g) = (&phi.particle, &psi.particle);
    let (nl, nr, ni) = (phi.field.functions.len(), psi.field.functions.len(), insertions.len());
    let est = run_batches(cfg.seed, cfg.layout()?, 1, |streams, out, _| {
        let mut buf = ParticlePath::empty(model.dim, plan.sampler.grid());
        let (path, inv_q) = plan.draw(&mut streams.particle, &mut buf);
        let w = f.eval(path.start()) * inv_q * g.eval(path.end());
        if w == 0.0 {
            out[0] = 0.0;
            return Ok(());
        }
        let particle = w * (-action_integral(&path, &model.potential)).exp();
        // variables: left endpoints, right endpoints, insertions
        let mut vars: Vec<(FieldFunction, f64)> = Vec::with_capacity(nl + nr + ni);
        vars.extend(phi.field.functions.iter().map(|h| (h.clone(), 0.0)));
        vars.extend(psi.field.functions.iter().map(|h| (h.clone(), t)));
        vars.extend(at.iter().zip(&marks).map(|(&j, &s)| (FieldFunction::form_at(path.position(j)), s)));
        let n = vars.len();
        let mut cov = nalgebra::DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = 0.5 * model.field.euclid_slice_inner(vars[a].1, &vars[a].0, vars[b].1, &vars[b].0)?;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let lt = phi.field.expand(0, &|a, b| cov[(a, b)]);
        let rt = psi.field.expand(nl, &|a, b| cov[(nl + a, nl + b)]);
        let sampler = GaussianSampler::new(&cov)?;
        let mut y = vec![0.0; n];
        let mut acc = 0.0;
        for _ in 0..params.n_inner {
            sampler.sample(&mut streams.inner, &mut y);
            let mut v = eval_terms(&lt, &y) * eval_terms(&rt, &y);
            for (k, (_, gk)) in insertions.iter().enumerate() {
                v *= gk.eval(y[nl + nr + k]);
            }
            acc += v;
        }
        out[0] = particle * acc / params.n_inner as f64;
        Ok(())
    })?;
    Ok(est.into_iter().next().unwrap())
}

/// `(1, e^{-t(H_bos + V_bos(φ(f)))} 1)` by sampling the stationary process
/// `s ↦ φ(δ_s⊗f)` on the time grid.
pub fn field_only_estimate(
    f: &FieldFunction,
    v_bos: &ScalarFunction,
    field: &FieldModel,
    t: f64,
    cfg: &SamplingConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    v_bos.validate_bounded_below()?;
    ensure!(t >= 0.0 && t.is_finite(), Domain, "horizon must be finite and non-negative");
    let grid = TimeGrid::uniform(t, cfg.steps_for(t))?;
    let pts = grid.points();
    let n = pts.len() - 1;
    let steps: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    let mut cov = nalgebra::DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = 0.5 * field.euclid_slice_inner(pts[a], f, pts[b], f)?;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let sampler = GaussianSampler::new(&cov)?;
    let constant = v_bos.is_identically(0.0);
    let est = run_batches(cfg.seed, cfg.layout()?, 1, |streams, out, _| {
        if constant || n == 0 {
            out[0] = 1.0;
            return Ok(());
        }
        let mut y = vec![0.0; n];
        sampler.sample(&mut streams.field, &mut y);
        let action: f64 = y.iter().zip(&steps).map(|(&yj, &d)| d * v_bos.eval(yj)).sum();
        out[0] = (-action).exp();
        Ok(())
    })?;
    Ok(est.into_iter().next().unwrap())
}

/// Weighted least-squares line through `(t_i, −log m_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSlopeFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

/// Fits `−log m(t) ≈ E t + c`. Errors in `m` propagate as `σ/m`; pass zero
/// errors for an unweighted fit.
pub fn log_slope_fit(horizons: &[f64], values: &[f64], stderrs: &[f64]) -> Result<LogSlopeFit> {
    ensure!(horizons.len() >= 3, Config, "need at least three horizons, got {}", horizons.len());
    ensure!(horizons.len() == values.len() && values.len() == stderrs.len(), Domain, "mismatched fit inputs");
    if let Some((t, m)) = horizons.iter().zip(values).find(|(_, &m)| !(m > 0.0)) {
        return Err(Error::Extraction(format!(
            "matrix element {m} at t = {t} is not positive; cannot take its logarithm"
        )));
    }
    let y: Vec<f64> = values.iter().map(|m| -m.ln()).collect();
    let weighted = stderrs.iter().all(|&s| s > 0.0);
    let w: Vec<f64> =
        if weighted { stderrs.iter().zip(values).map(|(s, m)| (m / s).powi(2)).collect() } else { vec![1.0; y.len()] };
    let sw: f64 = w.iter().sum();
    let st: f64 = w.iter().zip(horizons).map(|(w, t)| w * t).sum::<f64>() / sw;
    let sy: f64 = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let stt: f64 = w.iter().zip(horizons).map(|(w, t)| w * (t - st).powi(2)).sum();
    ensure!(stt > 0.0, Config, "horizons must be distinct");
    let sty: f64 = w.iter().zip(horizons).zip(&y).map(|((w, t), y)| w * (t - st) * (y - sy)).sum();
    let slope = sty / stt;
    let intercept = sy - slope * st;
    let residuals: Vec<f64> = horizons.iter().zip(&y).map(|(t, y)| y - (intercept + slope * t)).collect();
    let slope_stderr = if weighted {
        stt.recip().sqrt()
    } else {
        let rss: f64 = residuals.iter().map(|r| r * r).sum();
        let dof = (y.len() - 2) as f64;
        (rss / dof / stt).sqrt()
    };
    Ok(LogSlopeFit { slope, slope_stderr, intercept, residuals })
}

/// Ground-energy estimate from matrix elements at several horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundEnergyEstimate {
    pub horizons: Vec<f64>,
    pub matrix_elements: Vec<EstimateResult>,
    pub fit: LogSlopeFit,
}

impl GroundEnergyEstimate {
    pub fn energy(&self) -> f64 {
        self.fit.slope
    }
}

pub fn ground_energy_estimate(
    phi: &StateSpec,
    psi: &StateSpec,
    model: &CoupledModel,
    horizons: &[f64],
    params: &EstimatorConfig,
) -> Result<GroundEnergyEstimate> {
    ensure!(horizons.len() >= 3, Config, "need at least three horizons, got {}", horizons.len());
    ensure!(horizons.windows(2).all(|w| w[0] < w[1]), Config, "horizons must be strictly increasing");
    let results: Vec<EstimateResult> =
        horizons.iter().map(|&t| matrix_element(phi, psi, model, t, params)).collect::<Result<_>>()?;
    let means: Vec<f64> = results.iter().map(|r| r.mean).collect();
    let errs: Vec<f64> = results.iter().map(|r| r.stderr).collect();
    let fit = log_slope_fit(horizons, &means, &errs)?;
    Ok(GroundEnergyEstimate { horizons: horizons.to_vec(), matrix_elements: results, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Coupling, FormFactor, QuadratureSpec};
    use crate::particle::fk_particle_estimate;

    fn bump() -> TestFunction {
        TestFunction::normalized_bump(1)
    }

    fn single_mode(kappa: f64) -> CoupledModel {
        CoupledModel {
            dim: 1,
            particle: SubordinatorSpec::new(1.0).unwrap(),
            potential: PotentialSpec::Zero,
            field: FieldModel::single_mode(1.0, Coupling::Gaussian { amplitude: 0.5, scale: 1.0, center: vec![0.0] })
                .unwrap(),
            interaction: PolynomialInteraction::monomial(4, kappa).unwrap(),
        }
    }

    fn params(samples: usize, steps: usize) -> EstimatorConfig {
        EstimatorConfig {
            sampling: SamplingConfig {
                samples,
                batches: 20,
                steps_per_unit_time: steps,
                driver_refinement: 1,
                seed: 9,
            },
            ..EstimatorConfig::default()
        }
    }

    #[test]
    fn zero_coupling_is_the_particle_estimate() {
        let mut m = single_mode(0.0);
        m.potential = PotentialSpec::GaussianWell { depth: 1.0, width: 1.0, center: vec![0.0] };
        let p = params(4000, 50);
        let a = matrix_element(&StateSpec::vacuum(bump()), &StateSpec::vacuum(bump()), &m, 1.0, &p).unwrap();
        let b = fk_particle_estimate(&bump(), &bump(), &m.potential, 1.0, 1, &m.particle, &p.sampling).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn zero_states_give_exact_zero() {
        let m = single_mode(0.1);
        let p = params(1000, 20);
        let r =
            matrix_element(&StateSpec::vacuum(bump()), &StateSpec::vacuum(TestFunction::Zero), &m, 1.0, &p).unwrap();
        assert_eq!((r.mean, r.stderr), (0.0, 0.0));
        let zero_field =
            StateSpec { particle: bump(), field: CylinderPolynomial { terms: vec![], ..Default::default() } };
        let r = matrix_element(&zero_field, &StateSpec::vacuum(bump()), &m, 1.0, &p).unwrap();
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn weights_are_positive_and_coupling_lowers_the_element() {
        let p = params(4000, 50);
        let s = StateSpec::vacuum(bump());
        let free = matrix_element(&s, &s, &single_mode(0.0), 1.0, &p).unwrap();
        let coupled = matrix_element(&s, &s, &single_mode(0.5), 1.0, &p).unwrap();
        let w = coupled.weights.unwrap();
        assert_eq!(w.non_positive, 0);
        assert!(w.min_weight > 0.0 && w.max_weight <= 1.0 + 1e-12, "{w:?}");
        // common random numbers: pathwise the weight is ≤ 1
        assert!(coupled.mean < free.mean);
    }

    #[test]
    fn small_coupling_is_continuous() {
        let p = params(4000, 50);
        let s = StateSpec::vacuum(bump());
        let a = matrix_element(&s, &s, &single_mode(0.0), 1.0, &p).unwrap();
        let b = matrix_element(&s, &s, &single_mode(1e-3), 1.0, &p).unwrap();
        assert!((a.mean - b.mean).abs() <= 5.0 * a.stderr);
    }

    #[test]
    fn time_local_weight_agrees_at_zero_coupling_and_needs_vacuum() {
        let mut p = params(2000, 20);
        p.weight_form = WeightForm::TimeLocal;
        let s = StateSpec::vacuum(bump());
        let a = matrix_element(&s, &s, &single_mode(0.0), 1.0, &p).unwrap();
        p.weight_form = WeightForm::Smeared;
        let b = matrix_element(&s, &s, &single_mode(0.0), 1.0, &p).unwrap();
        assert_eq!(a.mean, b.mean);
        p.weight_form = WeightForm::TimeLocal;
        let excited = StateSpec {
            particle: bump(),
            field: CylinderPolynomial::power(FieldFunction::Mode { amplitude: 1.0 }, 1, false),
        };
        assert!(matches!(matrix_element(&excited, &s, &single_mode(0.1), 1.0, &p), Err(Error::Config(_))));
    }

    #[test]
    fn time_local_continuum_field_has_the_pair_covariance() {
        // E[φ_j φ_l] from the sampled modes against W(X_j − X_l, t_j − t_l):
        // check through the second-order expansion of the weight in κ
        let field =
            FieldModel::continuum(1, 1.0, FormFactor::GaussianCutoff { cutoff: 1.0 }, QuadratureSpec::default())
                .unwrap();
        let grid = TimeGrid::uniform(0.5, 10).unwrap();
        let path = ParticlePath::from_positions(1, &grid, (0..=10).map(|j| 0.1 * j as f64).collect()).unwrap();
        let p = PolynomialInteraction::monomial(2, 1e-4).unwrap();
        let mut rng = crate::rng::stream(3, 0);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| time_local_weight(&field, &p, &path, &mut rng)).sum::<f64>() / n as f64;
        // E[Σ Δ φ_j²] = Σ Δ W(0,0)
        let expected = 1.0 - 1e-4 * 0.5 * field.covariance(&[0.0], &[0.0], 0.0);
        assert!((mean - expected).abs() < 2e-6, "{mean} vs {expected}");
    }

    #[test]
    fn non_vacuum_at_zero_coupling_is_the_gaussian_moment() {
        // κ = 0, left φ(e), right φ(e): E[φ_0 φ_t] = ½ e^{-ω₀ t} per path
        let m = FieldModel::single_mode(1.0, Coupling::Constant { value: 1.0 }).unwrap();
        let model = CoupledModel { field: m, ..single_mode(0.0) };
        let e = FieldFunction::Mode { amplitude: 1.0 };
        let state = StateSpec { particle: bump(), field: CylinderPolynomial::power(e, 1, false) };
        let mut p = params(4000, 20);
        p.n_inner = 64;
        let r = matrix_element(&state, &state, &model, 1.0, &p).unwrap();
        let free =
            fk_particle_estimate(&bump(), &bump(), &PotentialSpec::Zero, 1.0, 1, &model.particle, &p.sampling).unwrap();
        let expected = free.mean * 0.5 * (-1.0f64).exp();
        assert!((r.mean - expected).abs() < 3.0 * r.stderr + 1e-3 * expected, "{} vs {expected}", r.mean);
    }

    #[test]
    fn insertions_reduce_and_match_second_moment() {
        let model = single_mode(0.0);
        let s = StateSpec::vacuum(bump());
        let p = params(4000, 20);
        let ones = n_point_insertions(&s, &s, &model, &[(0.5, ScalarFunction::constant(1.0))], 1.0, &p).unwrap();
        let free = matrix_element(&s, &s, &model, 1.0, &p).unwrap();
        assert!((ones.mean - free.mean).abs() < 1e-12);
        // G(y) = y²: conditional mean ½ c(X)²; compare with the particle
        // estimate carrying the insertion ½ c(x)² directly
        let mut q = p;
        q.n_inner = 64;
        let sq = n_point_insertions(&s, &s, &model, &[(0.5, ScalarFunction::monomial(2))], 1.0, &q).unwrap();
        let half_c2 = TestFunction::GaussianBump { center: vec![0.0], width: 0.5, amplitude: 0.125 };
        let direct = crate::particle::fk_with_insertions(
            &bump(),
            &bump(),
            &PotentialSpec::Zero,
            &[(0.5, half_c2)],
            1.0,
            1,
            &model.particle,
            &p.sampling,
        )
        .unwrap();
        assert!((sq.mean - direct.mean).abs() < 3.0 * sq.stderr.hypot(direct.stderr), "{} vs {}", sq.mean, direct.mean);
    }

    #[test]
    fn field_only_trivial_cases() {
        let field = FieldModel::single_mode(1.0, Coupling::Constant { value: 1.0 }).unwrap();
        let e = FieldFunction::Mode { amplitude: 1.0 };
        let cfg = SamplingConfig { samples: 2000, batches: 20, ..SamplingConfig::default() };
        let r = field_only_estimate(&e, &ScalarFunction::constant(0.0), &field, 1.0, &cfg).unwrap();
        assert_eq!((r.mean, r.stderr), (1.0, 0.0));
        let r = field_only_estimate(&e, &ScalarFunction::constant(0.7), &field, 1.3, &cfg).unwrap();
        assert!((r.mean - (-0.91f64).exp()).abs() < 1e-13);
        assert!(field_only_estimate(
            &e,
            &ScalarFunction::Polynomial { coefficients: vec![0.0, 0.0, 0.0, 1.0] },
            &field,
            1.0,
            &cfg
        )
        .is_err());
    }

    #[test]
    fn log_slope_fit_recovers_line() {
        let ts = [1.0, 2.0, 3.0, 4.0];
        let ms: Vec<f64> = ts.iter().map(|t: &f64| (0.3 - 0.7 * t).exp()).collect();
        let fit = log_slope_fit(&ts, &ms, &[0.0; 4]).unwrap();
        assert!((fit.slope - 0.7).abs() < 1e-12 && (fit.intercept + 0.3).abs() < 1e-12);
        assert!(log_slope_fit(&ts[..2], &ms[..2], &[0.0; 2]).is_err());
        assert!(matches!(log_slope_fit(&ts, &[1.0, 0.5, -0.1, 0.2], &[0.0; 4]), Err(Error::Extraction(_))));
    }

    #[test]
    fn ground_energy_shifts_with_constant_potential() {
        let s = StateSpec::vacuum(bump());
        let p = params(2000, 20);
        let m = single_mode(0.1);
        let hs = [1.0, 2.0, 3.0];
        let a = ground_energy_estimate(&s, &s, &m, &hs, &p).unwrap();
        let shifted = CoupledModel { potential: PotentialSpec::Constant { value: 0.4 }, ..m };
        let b = ground_energy_estimate(&s, &s, &shifted, &hs, &p).unwrap();
        assert!((b.energy() - a.energy() - 0.4).abs() < 1e-10);
    }
}
