//! Monte Carlo path integrals for a relativistic particle coupled to a scalar
//! Bose field with polynomial interaction, plus spectral-grid reference
//! solvers that the estimators are checked against.

// `ensure!` negates its condition so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod estimator;
pub mod field;
pub mod functions;
pub mod interaction;
pub mod oracle;
pub mod particle;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod subordinator;

pub use error::{Error, Result};
pub use estimator::{
    field_only_estimate, ground_energy_estimate, matrix_element, n_point_insertions, CoupledModel, EstimatorConfig,
    StateSpec, WeightForm,
};
pub use field::{CylinderPolynomial, FieldFunction, FieldModel, FormFactor, QuadratureSpec};
pub use functions::{PotentialSpec, ScalarFunction, TestFunction};
pub use interaction::{
    conditional_weight_vacuum, conditional_weight_with_observables, PolynomialInteraction, VacuumWeight,
};
pub use particle::{
    action_integral, fk_particle_estimate, fk_with_insertions, sample_path, ParticlePath, SamplingConfig, TimeGrid,
};
pub use stats::{EstimateResult, WeightDiagnostics};
pub use subordinator::{empirical_laplace_check, hitting_time_reference, SubordinatorIncrement, SubordinatorSpec};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/subordinator.md")]
    struct Subordinator;
    #[doc = include_str!("../../../book/src/particle.md")]
    struct Particle;
    #[doc = include_str!("../../../book/src/field.md")]
    struct Field;
    #[doc = include_str!("../../../book/src/interaction.md")]
    struct Interaction;
    #[doc = include_str!("../../../book/src/estimators.md")]
    struct Estimators;
    #[doc = include_str!("../../../book/src/oracles.md")]
    struct Oracles;
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    struct Reproducibility;
}
