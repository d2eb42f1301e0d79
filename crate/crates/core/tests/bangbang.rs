use proptest::prelude::*;
use ssc_core::bangbang::fixtures::{self, CIRCLE_RADIUS};
use ssc_core::bangbang::{
    extract_zero_level_set, fonc_residual, measure_bound_constant, random_differences, sign_control,
    subderivative_quotient, ControlField,
};
use ssc_core::field::GridFunction;
use ssc_core::rng::seeded;
use ssc_core::Error;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sampled_controls_are_feasible_and_satisfy_fonc(seed in any::<u64>()) {
        let sp = fixtures::manufactured(32, 4.0).unwrap();
        for v in random_differences(&sp, 6, &mut seeded(seed)).unwrap() {
            let u = sp.ubar().field().zip_with(&v, |a, b| a + b).unwrap();
            prop_assert!(u.values().iter().all(|x| x.abs() <= 1.0));
            let r = fonc_residual(sp.phibar(), sp.ubar(), &ControlField::new(u).unwrap()).unwrap();
            prop_assert!(r.signed >= -1e-12);
            prop_assert!((r.absolute - r.signed).abs() <= 1e-12);
        }
    }

    #[test]
    fn sign_control_is_bang_bang(shift in -0.6f64..0.6) {
        let (phi, _) = fixtures::line(21).unwrap();
        let s = sign_control(&phi.map(|v| v + shift));
        prop_assert!(s.control.field().values().iter().all(|&u| u == 1.0 || u == -1.0));
    }

    #[test]
    fn zero_direction_has_zero_quotient(t in 1e-3f64..1.0) {
        let (phi, _) = fixtures::line(21).unwrap();
        let ubar = sign_control(&phi).control;
        prop_assert_eq!(subderivative_quotient(&phi, &ubar, t, &GridFunction::zeros(*phi.grid())).unwrap(), 0.0);
    }
}

#[test]
fn infeasible_direction_has_infinite_quotient() {
    let (phi, _) = fixtures::line(21).unwrap();
    let ubar = sign_control(&phi).control;
    let mut h = GridFunction::zeros(*phi.grid());
    h.values_mut()[0] = 1.0;
    let h = h.zip_with(ubar.field(), |a, u| a * u).unwrap();
    assert_eq!(subderivative_quotient(&phi, &ubar, 0.5, &h).unwrap(), f64::INFINITY);
}

#[test]
fn level_set_is_stable_under_refinement() {
    for name in ["circle", "line"] {
        let coarse = fixtures::level_set_fixture(name, 129).unwrap();
        let fine = fixtures::level_set_fixture(name, 257).unwrap();
        let a = extract_zero_level_set(&coarse.0, &coarse.1, None).unwrap();
        let b = extract_zero_level_set(&fine.0, &fine.1, None).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        assert!(rel(a.total_surface, b.total_surface) < 0.02, "{name}");
        assert!(rel(a.min_gradient(), b.min_gradient()) < 0.02, "{name}");
        assert!(rel(a.max_gradient(), b.max_gradient()) < 0.02, "{name}");
    }
}

#[test]
fn circle_band_measure_is_linear_in_eps() {
    let (phi, mask) = fixtures::circle(257, CIRCLE_RADIUS).unwrap();
    let b = measure_bound_constant(&phi, &mask, &[0.02, 0.01, 0.005]).unwrap();
    // |{|r^2 - R^2| <= eps}| = 2 pi eps for a circle.
    for r in &b.ratios {
        assert!((r / (2.0 * std::f64::consts::PI) - 1.0).abs() < 0.01, "{r}");
    }
}

#[test]
fn degenerate_fixture_violates_the_structural_assumption() {
    let (phi, mask) = fixtures::degenerate(65).unwrap();
    assert!(matches!(
        extract_zero_level_set(&phi, &mask, None),
        Err(Error::StructuralAssumptionViolated { .. })
    ));
}
