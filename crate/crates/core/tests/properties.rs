use proptest::prelude::*;
use relfk::field::Coupling;
use relfk::rng::stream;
use relfk::{
    conditional_weight_vacuum, sample_path, FieldModel, FormFactor, PolynomialInteraction, QuadratureSpec,
    SubordinatorSpec, TimeGrid,
};

fn field_1d() -> FieldModel {
    FieldModel::continuum(1, 1.0, FormFactor::GaussianCutoff { cutoff: 1.0 }, QuadratureSpec::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplace_exponent_is_a_bernstein_function(m in 0.05f64..5.0, s in 0.0f64..50.0, ds in 1e-3f64..5.0) {
        let spec = SubordinatorSpec::new(m).unwrap();
        let h = spec.laplace_exponent(s).unwrap();
        let closed = (s + m * m).sqrt() - m;
        prop_assert!((h - closed).abs() <= 1e-12 * (1.0 + closed));
        prop_assert!(h >= 0.0);
        prop_assert!(spec.laplace_exponent(s + ds).unwrap() > h);
        // concave: increments shrink
        let a = spec.laplace_exponent(s + ds).unwrap() - h;
        let b = spec.laplace_exponent(s + 2.0 * ds).unwrap() - spec.laplace_exponent(s + ds).unwrap();
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn increments_are_positive(m in 0.1f64..5.0, dt in 1e-4f64..3.0, seed in any::<u64>()) {
        let spec = SubordinatorSpec::new(m).unwrap();
        let mut rng = stream(seed, 0);
        for _ in 0..32 {
            let inc = spec.sample_increment(dt, &mut rng).unwrap();
            prop_assert!(inc.value > 0.0 && inc.value.is_finite());
            prop_assert_eq!(inc.duration, dt);
        }
    }

    #[test]
    fn marked_grids_hit_every_mark(t in 0.5f64..5.0, n in 1usize..64, fracs in prop::collection::btree_set(1u32..999, 0..5)) {
        let marks: Vec<f64> = fracs.iter().map(|&f| t * f as f64 / 1000.0).collect();
        let grid = TimeGrid::with_marks(t, n, &marks).unwrap();
        let pts = grid.points();
        prop_assert_eq!(pts[0], 0.0);
        prop_assert_eq!(grid.horizon(), t);
        prop_assert!(pts.windows(2).all(|w| w[0] < w[1]));
        for &m in &marks {
            prop_assert!((pts[grid.index_of(m)] - m).abs() <= 1e-12 * t);
        }
    }

    #[test]
    fn refinement_keeps_old_points(t in 0.1f64..4.0, n in 1usize..32, r in 1usize..6) {
        let grid = TimeGrid::uniform(t, n).unwrap();
        let fine = grid.refine(r);
        prop_assert_eq!(fine.steps(), n * r);
        for (j, &p) in grid.points().iter().enumerate() {
            prop_assert_eq!(fine.points()[j * r], p);
        }
    }

    #[test]
    fn vacuum_weight_is_a_probability_weight(
        sigma2 in 0.0f64..4.0,
        c2 in -1.0f64..1.0,
        c4 in 0.01f64..1.0,
        kappa in 0.0f64..2.0,
    ) {
        let p = PolynomialInteraction::new(vec![0.0, c2, 0.0, c4], kappa).unwrap();
        let w = conditional_weight_vacuum(sigma2, &p, 64).unwrap();
        prop_assert!(w > 0.0 && w.is_finite());
        if kappa == 0.0 || sigma2 == 0.0 {
            prop_assert!((w - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn covariance_is_symmetric_and_dominated(x in -3.0f64..3.0, y in -3.0f64..3.0, tau in -4.0f64..4.0) {
        for field in [field_1d(), FieldModel::single_mode(1.3, Coupling::Gaussian { amplitude: 0.7, scale: 1.0, center: vec![0.2] }).unwrap()] {
            let c = field.covariance(&[x], &[y], tau);
            prop_assert!((c - field.covariance(&[y], &[x], -tau)).abs() <= 1e-14);
            prop_assert!(c.abs() <= field.max_covariance() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn path_variance_is_non_negative(seed in any::<u64>(), n in 1usize..40) {
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let spec = SubordinatorSpec::new(1.0).unwrap();
        let path = sample_path(&[0.0], &grid, &spec, &mut stream(seed, 3)).unwrap();
        let v = field_1d().path_variance(&path).unwrap();
        prop_assert!(v >= 0.0 && v <= field_1d().max_covariance() * (1.0 + 1e-12));
    }
}
