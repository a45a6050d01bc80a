//! Experiment configuration files (TOML or JSON).

use std::path::Path;

use relfk::field::Coupling;
use relfk::oracle::{CoupledGridSpec, GridSpec, ModeGridSpec};
use relfk::{
    CoupledModel, EstimatorConfig, FieldFunction, FieldModel, FormFactor, PolynomialInteraction, PotentialSpec,
    QuadratureSpec, SamplingConfig, ScalarFunction, StateSpec, SubordinatorSpec, TestFunction, WeightForm,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<PolynomialInteraction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<StatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_only: Option<FieldOnlyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subordinator: Option<SubordinatorCheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_table: Option<CovarianceTableConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    /// Field insertions `G_j(φ(ρ_x))` for `n-point`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub insertions: Vec<FieldInsertion>,
    /// Multiplicative particle insertions for `free-particle`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub particle_insertions: Vec<ParticleInsertion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    /// Particle rest mass `M`.
    pub mass: f64,
    #[serde(default = "zero_potential")]
    pub potential: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
}

fn zero_potential() -> PotentialSpec {
    PotentialSpec::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    SingleMode {
        omega0: f64,
        coupling: Coupling,
    },
    Continuum {
        /// Field mass `m` in `ω(k) = √(k² + m²)`.
        mass: f64,
        form: FormFactor,
        #[serde(default)]
        quadrature: QuadratureSpec,
    },
}

impl FieldConfig {
    pub fn build(&self, dim: usize) -> relfk::Result<FieldModel> {
        match self {
            FieldConfig::SingleMode { omega0, coupling } => FieldModel::single_mode(*omega0, coupling.clone()),
            FieldConfig::Continuum { mass, form, quadrature } => FieldModel::continuum(dim, *mass, *form, *quadrature),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<f64>,
    pub samples: usize,
    pub batches: usize,
    pub steps_per_unit_time: usize,
    pub driver_refinement: usize,
    pub seed: u64,
    pub hermite_order: usize,
    pub n_inner: usize,
    pub max_field_degree: usize,
    pub weight_form: WeightForm,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EstimatorConfig::default();
        Self {
            horizon: None,
            horizons: Vec::new(),
            samples: e.sampling.samples,
            batches: e.sampling.batches,
            steps_per_unit_time: e.sampling.steps_per_unit_time,
            driver_refinement: e.sampling.driver_refinement,
            seed: e.sampling.seed,
            hermite_order: e.hermite_order,
            n_inner: e.n_inner,
            max_field_degree: e.max_field_degree,
            weight_form: e.weight_form,
        }
    }
}

impl RunConfig {
    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            samples: self.samples,
            batches: self.batches,
            steps_per_unit_time: self.steps_per_unit_time,
            driver_refinement: self.driver_refinement,
            seed: self.seed,
        }
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            sampling: self.sampling(),
            hermite_order: self.hermite_order,
            n_inner: self.n_inner,
            max_field_degree: self.max_field_degree,
            weight_form: self.weight_form,
        }
    }

    /// `horizons` when given, else the single `horizon`.
    pub fn horizon_list(&self) -> Vec<f64> {
        if !self.horizons.is_empty() {
            self.horizons.clone()
        } else {
            self.horizon.into_iter().collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesConfig {
    pub left: StateSpec,
    pub right: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldInsertion {
    pub time: f64,
    pub function: ScalarFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleInsertion {
    pub time: f64,
    pub function: TestFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldOnlyConfig {
    pub function: FieldFunction,
    pub potential: ScalarFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubordinatorCheckConfig {
    pub horizons: Vec<f64>,
    pub laplace_args: Vec<f64>,
    /// Level and step of the hitting-time comparison.
    pub ks_horizon: f64,
    pub ks_step: f64,
    pub ks_samples: usize,
    pub ks_alpha: f64,
}

impl Default for SubordinatorCheckConfig {
    fn default() -> Self {
        Self {
            horizons: vec![0.5, 1.0, 2.0],
            laplace_args: vec![0.5, 1.0, 2.0],
            ks_horizon: 1.0,
            ks_step: 1e-4,
            ks_samples: 10_000,
            ks_alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovarianceTableConfig {
    pub separations: Vec<f64>,
    pub lags: Vec<f64>,
}

impl Default for CovarianceTableConfig {
    fn default() -> Self {
        Self {
            separations: (0..=8).map(|i| 0.5 * i as f64).collect(),
            lags: (0..=8).map(|i| 0.25 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// The particle semigroup alone (`free-particle`).
    Particle,
    /// Particle and one field mode (`matrix-element`, single-mode model).
    Coupled,
    /// One field mode with a potential (`field-only`).
    FieldOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub kind: OracleKind,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Also run on the refined grid and report the change.
    #[serde(default = "yes")]
    pub check_refinement: bool,
}

fn default_grid() -> GridSpec {
    CoupledGridSpec::default().x
}

fn default_modes() -> usize {
    CoupledGridSpec::default().modes
}

fn yes() -> bool {
    true
}

impl OracleConfig {
    pub fn coupled_grid(&self) -> CoupledGridSpec {
        CoupledGridSpec { x: self.grid, modes: self.modes }
    }

    pub fn mode_grid(&self) -> ModeGridSpec {
        ModeGridSpec { modes: self.modes, dt: self.grid.dt }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Largest accepted `|MC − oracle| / stderr`.
    pub sigma_limit: f64,
    /// Largest accepted change of the oracle under grid refinement.
    pub convergence_tol: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { sigma_limit: 3.0, convergence_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

/// Supported file formats, chosen by extension (`.json` or anything else
/// for TOML).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn of(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display()), Vec::new()))?;
        Self::parse(&text, Format::of(path))
    }

    pub fn parse(text: &str, format: Format) -> Result<Self, CliError> {
        match format {
            Format::Toml => toml::from_str(text).map_err(|e| CliError::Config(e.to_string(), Vec::new())),
            Format::Json => serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string(), Vec::new())),
        }
    }

    pub fn to_text(&self, format: Format) -> String {
        match format {
            Format::Toml => toml::to_string(self).expect("configs serialize to TOML"),
            Format::Json => serde_json::to_string_pretty(self).expect("configs serialize to JSON"),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configs serialize to JSON");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn run(&self) -> RunConfig {
        self.run.clone().unwrap_or_default()
    }

    pub fn subordinator_check(&self) -> SubordinatorCheckConfig {
        self.subordinator.clone().unwrap_or_default()
    }

    pub fn compare_limits(&self) -> CompareConfig {
        self.compare.clone().unwrap_or_default()
    }
}

/// Collects every missing block before reporting, so that one failed run
/// lists them all.
#[derive(Default)]
pub struct Requirements {
    missing: Vec<String>,
}

impl Requirements {
    pub fn need<'a, T>(&mut self, what: &str, v: Option<&'a T>) -> Option<&'a T> {
        if v.is_none() {
            self.missing.push(what.to_string());
        }
        v
    }

    pub fn need_horizons(&mut self, run: &RunConfig) -> Vec<f64> {
        let h = run.horizon_list();
        if h.is_empty() {
            self.missing.push("run.horizon".to_string());
        }
        h
    }

    pub fn finish(self, command: &str) -> Result<(), CliError> {
        if self.missing.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("`{command}` needs: {}", self.missing.join(", ")), self.missing))
        }
    }
}

pub fn particle_spec(model: &ModelConfig) -> relfk::Result<SubordinatorSpec> {
    SubordinatorSpec::new(model.mass)
}

pub fn coupled_model(
    model: &ModelConfig,
    field: &FieldConfig,
    interaction: &PolynomialInteraction,
) -> relfk::Result<CoupledModel> {
    let m = CoupledModel {
        dim: model.dim,
        particle: particle_spec(model)?,
        potential: model.potential.clone(),
        field: field.build(model.dim)?,
        interaction: interaction.clone(),
    };
    m.validate()?;
    Ok(m)
}
