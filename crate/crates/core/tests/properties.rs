//! Property tests for the structural invariants: monotone inversion of
//! the box coordinate, range-boundedness of the shape-preserving
//! interpolant, the coupling bound, and the metric identities.

use ergomix_core::conjugation::build_conjugation;
use ergomix_core::limit_theorems::hitting_time;
use ergomix_core::map_models::{farey, pm_quadratic};
use ergomix_core::numerics::MonotoneCubic;
use ergomix_core::observables::{coupling, mu_distance, sin_phi};
use ergomix_core::transfer::{unit_grid, GridDensity};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_inversion_round_trips(s in 1e-3f64..200.0) {
        let map = farey();
        let c = build_conjugation(map.density().unwrap()).unwrap();
        let r = (c.phi(c.phi_inverse(s)) - s).abs();
        prop_assert!(r <= 1e-9, "residual {r:e} at s = {s}");
    }

    #[test]
    fn quadratic_phi_inversion_round_trips(s in 1e-3f64..200.0) {
        let map = pm_quadratic();
        let c = build_conjugation(map.density().unwrap()).unwrap();
        let r = (c.phi(c.phi_inverse(s)) - s).abs();
        prop_assert!(r <= 1e-9, "residual {r:e} at s = {s}");
    }

    #[test]
    fn interpolant_stays_in_cell_range(
        raw in prop::collection::vec(0.0f64..1.0, 8..40),
        t in 0.0f64..1.0
    ) {
        // build strictly increasing nodes and monotone values
        let mut nodes = vec![0.0f64];
        let mut values = vec![0.1f64];
        for (i, r) in raw.iter().enumerate() {
            nodes.push(nodes[i] + 0.05 + r);
            values.push(values[i] + r * 0.7);
        }
        let p = MonotoneCubic::new(&nodes, &values).unwrap();
        let q = nodes[0] + t * (nodes[nodes.len() - 1] - nodes[0]);
        let v = p.eval(q);
        let k = nodes.partition_point(|&x| x <= q).saturating_sub(1).min(nodes.len() - 2);
        let (lo, hi) = (values[k].min(values[k + 1]), values[k].max(values[k + 1]));
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
    }

    #[test]
    fn coupling_respects_the_sup_bound(a in 0.05f64..2.0, b in 0.0f64..2.0) {
        let map = farey();
        let g = GridDensity::from_fn(&map, unit_grid(1024), |x| a * x + b * x * x).unwrap();
        let f = sin_phi(&map).unwrap();
        let c = coupling(&map, &f, &g).unwrap();
        prop_assert!(c.abs() <= f.sup_bound * g.mass * (1.0 + 1e-9));
    }

    #[test]
    fn measure_distance_is_additive_on_ordered_triples(
        x in 1e-6f64..0.98,
        u in 0.01f64..1.0,
        v in 0.01f64..1.0
    ) {
        let map = farey();
        let y = x + (0.99 - x) * u / (u + v + 1.0);
        let z = y + (0.99 - y) * v / (v + 1.0);
        let lhs = mu_distance(&map, x, z);
        let rhs = mu_distance(&map, x, y) + mu_distance(&map, y, z);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
        prop_assert!((mu_distance(&map, x, y) - mu_distance(&map, y, x)).abs() == 0.0);
    }

    #[test]
    fn accelerated_hitting_matches_direct(x in 1e-4f64..0.9999) {
        let map = farey();
        let fast = hitting_time(&map, x, 1 << 40).unwrap();
        let mut z = x;
        let mut k = 0u64;
        while z < 0.5 {
            z = map.forward(z);
            k += 1;
        }
        prop_assert_eq!(fast, k);
    }
}
