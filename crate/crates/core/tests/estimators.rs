use relfk::field::Coupling;
use relfk::{
    field_only_estimate, fk_particle_estimate, matrix_element, CoupledModel, EstimatorConfig, FieldFunction,
    FieldModel, PolynomialInteraction, PotentialSpec, SamplingConfig, ScalarFunction, StateSpec, SubordinatorSpec,
    TestFunction,
};

fn small(seed: u64) -> SamplingConfig {
    SamplingConfig { samples: 20_000, batches: 20, steps_per_unit_time: 40, driver_refinement: 1, seed }
}

fn model(kappa: f64) -> CoupledModel {
    CoupledModel {
        dim: 1,
        particle: SubordinatorSpec::new(1.0).unwrap(),
        potential: PotentialSpec::GaussianWell { depth: 0.5, width: 1.0, center: vec![0.0] },
        field: FieldModel::single_mode(1.0, Coupling::Gaussian { amplitude: 0.5, scale: 1.0, center: vec![0.0] })
            .unwrap(),
        interaction: PolynomialInteraction::new(vec![0.0, 1.0, 0.0, 0.5], kappa).unwrap(),
    }
}

fn params(seed: u64) -> EstimatorConfig {
    EstimatorConfig { sampling: small(seed), ..EstimatorConfig::default() }
}

#[test]
fn same_seed_same_bits() {
    let state = StateSpec::vacuum(TestFunction::normalized_bump(1));
    let a = matrix_element(&state, &state, &model(0.2), 1.0, &params(9)).unwrap();
    let b = matrix_element(&state, &state, &model(0.2), 1.0, &params(9)).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let c = matrix_element(&state, &state, &model(0.2), 1.0, &params(10)).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn zero_coupling_reduces_to_the_particle() {
    let f = TestFunction::normalized_bump(1);
    let state = StateSpec::vacuum(f.clone());
    let m = model(0.0);
    let coupled = matrix_element(&state, &state, &m, 1.0, &params(4)).unwrap();
    let particle = fk_particle_estimate(&f, &f, &m.potential, 1.0, 1, &m.particle, &small(4)).unwrap();
    assert!((coupled.mean - particle.mean).abs() <= 1e-12 * particle.mean, "{coupled:?} vs {particle:?}");
}

#[test]
fn coupling_lowers_the_matrix_element() {
    // common random numbers: both runs see the same particle paths
    let state = StateSpec::vacuum(TestFunction::normalized_bump(1));
    let free = matrix_element(&state, &state, &model(0.0), 1.0, &params(5)).unwrap();
    let coupled = matrix_element(&state, &state, &model(0.5), 1.0, &params(5)).unwrap();
    assert!(coupled.mean < free.mean);
    let w = coupled.weights.unwrap();
    assert_eq!(w.non_positive, 0);
}

#[test]
fn zero_horizon_is_the_inner_product() {
    let f = TestFunction::normalized_bump(1);
    let e = fk_particle_estimate(&f, &f, &PotentialSpec::Zero, 0.0, 1, &SubordinatorSpec::new(1.0).unwrap(), &small(1))
        .unwrap();
    assert!((e.mean - 1.0).abs() < 5.0 * e.stderr.max(1e-3), "{e:?}");
}

#[test]
fn field_only_quadratic_potential_obeys_jensen() {
    // Jensen: E e^{-A} ≥ e^{-E A} = e^{-1/2} since E y² = ½ at every time.
    let field = FieldModel::single_mode(1.0, Coupling::Constant { value: 1.0 }).unwrap();
    let f = FieldFunction::Mode { amplitude: 1.0 };
    let e = field_only_estimate(&f, &ScalarFunction::monomial(2), &field, 1.0, &small(2)).unwrap();
    assert!(e.mean < 1.0 && e.mean > (-0.5f64).exp(), "{e:?}");
    let trivial = field_only_estimate(&f, &ScalarFunction::constant(0.0), &field, 1.0, &small(2)).unwrap();
    assert_eq!(trivial.mean, 1.0);
}

#[test]
fn negative_coupling_is_rejected() {
    assert!(PolynomialInteraction::new(vec![0.0, 1.0], -0.1).is_err());
}

#[test]
fn estimates_serialize_round_trip() {
    let f = TestFunction::normalized_bump(1);
    let e = fk_particle_estimate(&f, &f, &PotentialSpec::Zero, 0.5, 1, &SubordinatorSpec::new(1.0).unwrap(), &small(3))
        .unwrap();
    let text = serde_json::to_string(&e).unwrap();
    let back: relfk::EstimateResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back, e);
}
