use proptest::prelude::*;
use ssc_core::bessel::{kernel_half_nodes, BesselSpec};
use ssc_core::field::{Atom, AtomicMeasure, UniformGrid};
use ssc_core::transport::{pushforward, pushforward_dual_check, LipschitzMap};
use ssc_core::Error;

fn measure_strategy() -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.01f64..1.0), 1..8).prop_map(|atoms| {
        AtomicMeasure::new(2, atoms.into_iter().map(|(x, y, w)| Atom { location: [x, y, 0.0], weight: w }).collect())
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pushforward_preserves_mass_and_atom_count(mu in measure_strategy(), s in 0.1f64..3.0) {
        let img = pushforward(&mu, &LipschitzMap::scaling(2, s).unwrap()).unwrap();
        prop_assert_eq!(img.len(), mu.len());
        prop_assert!((img.total_mass() - mu.total_mass()).abs() <= 1e-12 * mu.total_mass());
    }

    #[test]
    fn composition_multiplies_constants(a in 0.1f64..2.0, b in 0.1f64..2.0) {
        let outer = LipschitzMap::scaling(2, a).unwrap();
        let inner = LipschitzMap::scaling(2, b).unwrap();
        let c = outer.compose(&inner).unwrap();
        prop_assert!((c.declared_l() - a * b).abs() <= 1e-15 * a * b);
        let x = [0.3, -0.7, 0.0];
        let y = c.apply(&x);
        prop_assert!((y[0] - a * b * x[0]).abs() < 1e-15 && (y[1] - a * b * x[1]).abs() < 1e-15);
    }

    #[test]
    fn contractions_do_not_increase_the_energy_norm(mu in measure_strategy(), s in 0.05f64..1.0) {
        let spec = BesselSpec::new(1.0, 2.0, 2).unwrap();
        let h = 1.0 / 16.0;
        let r = kernel_half_nodes(1.0, 2, h) as f64 * h + h;
        let grid = UniformGrid::covering(2, &[-r, -r], &[1.0 + r, 1.0 + r], h).unwrap();
        let rep = pushforward_dual_check(&mu, &LipschitzMap::scaling(2, s).unwrap(), &spec, &grid).unwrap();
        prop_assert!(rep.ratio() <= 1.0 + 1e-6, "{:?}", rep);
    }
}

#[test]
fn translations_and_projections_are_one_lipschitz() {
    let t = LipschitzMap::translation(3, [1.0, -2.0, 0.5]).unwrap();
    assert_eq!(t.declared_l(), 1.0);
    assert_eq!(t.apply(&[0.0; 3]), [1.0, -2.0, 0.5]);
    let p = LipschitzMap::projection(3, &[0, 2]).unwrap();
    assert_eq!(p.apply(&[1.0, 2.0, 3.0]), [1.0, 0.0, 3.0]);
    assert!(LipschitzMap::projection(2, &[2]).is_err());
}

#[test]
fn collapse_to_a_point_is_not_degenerate_for_p_two() {
    let spec = BesselSpec::new(1.0, 2.0, 1).unwrap();
    let h = 0.01;
    let r = kernel_half_nodes(1.0, 1, h) as f64 * h + h;
    let grid = UniformGrid::covering(1, &[-r], &[1.0 + r], h).unwrap();
    let mu = AtomicMeasure::new(1, vec![Atom { location: [0.2, 0.0, 0.0], weight: 1.0 }]).unwrap();
    let t = LipschitzMap::new(1, 1.0, |_| [0.5, 0.0, 0.0]).unwrap();
    let rep = pushforward_dual_check(&mu, &t, &spec, &grid).unwrap();
    assert!((rep.ratio() - 1.0).abs() < 1e-9);
    let bad = LipschitzMap::new(1, 0.5, |x| x.map(|v| 0.9 * v));
    assert!(matches!(bad, Err(Error::LipschitzViolated { .. })));
}
