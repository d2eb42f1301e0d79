use proptest::prelude::*;
use ssc_core::field::{inner_product, lp_norm, measure_from_density, random_measures, DomainMask, GridFunction, UniformGrid};
use ssc_core::rng::seeded;

fn grid_strategy() -> impl Strategy<Value = UniformGrid> {
    (1usize..=3, 3usize..9, 0.1f64..3.0, -2.0f64..2.0)
        .prop_map(|(d, n, ext, lo)| UniformGrid::cube(d, lo, lo + ext, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn node_weights_sum_to_volume(g in grid_strategy()) {
        let total: f64 = (0..g.node_count()).map(|i| g.node_weight(i)).sum();
        prop_assert!((total - g.volume()).abs() <= 1e-12 * g.volume().max(1.0));
    }

    #[test]
    fn multi_index_round_trips(g in grid_strategy(), k in 0usize..1000) {
        let flat = k % g.node_count();
        prop_assert_eq!(g.flat_index(g.multi_index(flat)), flat);
        let idx = g.nearest_node(&g.node(flat)).unwrap();
        prop_assert_eq!(g.flat_index(idx), flat);
    }

    #[test]
    fn lp_norm_is_absolutely_homogeneous(g in grid_strategy(), t in -5.0f64..5.0, q in 1.0f64..6.0) {
        let f = GridFunction::from_fn(g, |x| (x[0] * 1.7).sin() + x[1] * x[2] - 0.3);
        let a = lp_norm(&f.scaled(t), q).unwrap();
        let b = t.abs() * lp_norm(&f, q).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b));
    }

    #[test]
    fn cauchy_schwarz(g in grid_strategy(), s in 0.1f64..4.0) {
        let f = GridFunction::from_fn(g, |x| (s * x[0]).cos() + x[1]);
        let h = GridFunction::from_fn(g, |x| x[0] * x[0] - s * x[2]);
        let ip = inner_product(&f, &h).unwrap().abs();
        prop_assert!(ip <= lp_norm(&f, 2.0).unwrap() * lp_norm(&h, 2.0).unwrap() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn density_measure_is_nonnegative(n in 4usize..12, c in 0.0f64..3.0) {
        let g = UniformGrid::unit_box(2, n).unwrap();
        let mask = DomainMask::box_interior(g).unwrap();
        let f = GridFunction::from_fn(g, |x| c + x[0] * x[1]);
        let mu = measure_from_density(&f, &mask).unwrap();
        prop_assert!(mu.total_mass() >= 0.0);
        prop_assert!(mu.atoms().iter().all(|a| a.weight >= 0.0));
    }

    #[test]
    fn random_measures_are_seeded_and_in_the_unit_box(seed in any::<u64>(), dim in 1usize..=3) {
        let a = random_measures(dim, 5, 7, &mut seeded(seed)).unwrap();
        let b = random_measures(dim, 5, 7, &mut seeded(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        for mu in &a {
            prop_assert!((1..=7).contains(&mu.len()));
            for atom in mu.atoms() {
                prop_assert!((0.0..1.0).contains(&atom.weight));
                for k in 0..3 {
                    let inside = if k < dim { (0.0..1.0).contains(&atom.location[k]) } else { atom.location[k] == 0.0 };
                    prop_assert!(inside);
                }
            }
        }
    }
}

#[test]
fn csv_round_trip_preserves_bits() {
    let g = UniformGrid::cube(2, -1.0, 1.0, 7).unwrap();
    let f = GridFunction::from_fn(g, |x| (3.0 * x[0]).exp() / 7.0 - x[1]);
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let back = GridFunction::read_csv(g, buf.as_slice()).unwrap();
    assert_eq!(back, f);
}
