use super::*;
use crate::map_models::{farey, pm_halfline};
use crate::transfer::{unit_grid, GridDensity};

#[test]
fn constants_average_to_themselves() {
    let map = farey();
    let c = GlobalObservable::pointwise("const", |_| 2.5, 2.5);
    for &a in &[0.9, 0.1, 1e-6, 1e-30] {
        assert!((finite_volume_average(&map, &c, a).unwrap() - 2.5).abs() < 1e-12);
    }
}

#[test]
fn farey_sine_box_average_closed_form() {
    // substitution: average over [e^{-L}, 1) is (1 - cos L)/L
    let map = farey();
    let f = sin_phi(&map).unwrap();
    for &l in &[1.0f64, 7.0, 40.0, 160.0] {
        let got = finite_volume_average(&map, &f, (-l).exp()).unwrap();
        let expect = (1.0 - l.cos()) / l;
        assert!((got - expect).abs() < 1e-10, "L = {l}: {got} vs {expect}");
    }
}

#[test]
fn half_line_sine_vanishes_over_full_periods() {
    let map = pm_halfline();
    let f = sin_half_line();
    let a = 8.0 * std::f64::consts::PI;
    let got = finite_volume_average(&map, &f, a).unwrap();
    assert!(got.abs() < 1e-13, "got {got}");
}

#[test]
fn av_estimates_for_the_stock_pair() {
    let map = farey();
    let sched = AvSchedule::unit_geometric(DEFAULT_SCHEDULE_DEPTH, 64);
    let s = estimate_av(&map, &sin_phi(&map).unwrap(), &sched).unwrap();
    assert!(s.extrapolated.abs() <= 0.02, "Av(sin o Phi) = {}", s.extrapolated);
    assert!(s.converged, "width {}", s.cauchy_width);
    let s2 = estimate_av(&map, &sin_sq_phi(&map).unwrap(), &sched).unwrap();
    assert!((s2.extrapolated - 0.5).abs() <= 0.02, "Av(sin^2) = {}", s2.extrapolated);
    assert!(s2.converged);
}

#[test]
fn compactly_supported_observable_drowns() {
    // bounded, supported away from the indifferent end: a local
    // observable in disguise, so its infinite-volume average is zero
    let map = farey();
    let f = GlobalObservable::pointwise("bump", |x| if x > 0.2 && x < 0.8 { 1.0 } else { 0.0 }, 1.0)
        .with_breakpoints(vec![0.2, 0.8]);
    let sched = AvSchedule::unit_geometric(DEFAULT_SCHEDULE_DEPTH, 64);
    let s = estimate_av(&map, &f, &sched).unwrap();
    assert!(s.extrapolated.abs() <= 0.02, "got {}", s.extrapolated);
}

#[test]
fn av_is_linear_within_widths() {
    let map = farey();
    let sched = AvSchedule::unit_geometric(DEFAULT_SCHEDULE_DEPTH, 64);
    let f = sin_phi(&map).unwrap();
    let g = sin_sq_phi(&map).unwrap();
    let combo = {
        let d = map.density().unwrap();
        let (phi, _) = d.clone_antiderivatives().unwrap();
        GlobalObservable::pointwise("combo", move |x| {
            let s = phi(x);
            2.0 * s.sin() - 3.0 * s.sin().powi(2)
        }, 5.0)
    };
    let ef = estimate_av(&map, &f, &sched).unwrap();
    let eg = estimate_av(&map, &g, &sched).unwrap();
    let ec = estimate_av(&map, &combo, &sched).unwrap();
    let lhs = ec.extrapolated;
    let rhs = 2.0 * ef.extrapolated - 3.0 * eg.extrapolated;
    let width = ec.cauchy_width + 2.0 * ef.cauchy_width + 3.0 * eg.cauchy_width;
    assert!((lhs - rhs).abs() <= width.max(1e-12), "lhs {lhs} rhs {rhs} width {width}");
}

#[test]
fn schedule_minimum_enforced() {
    let map = farey();
    let f = sin_phi(&map).unwrap();
    let short = AvSchedule {
        cuts: vec![0.5, 0.25, 0.125],
        tolerance: 0.02,
    };
    assert!(matches!(
        estimate_av(&map, &f, &short),
        Err(ObsError::ScheduleTooShort { .. })
    ));
}

#[test]
fn coupling_of_one_is_the_mass() {
    let map = farey();
    let g = GridDensity::from_fn(&map, unit_grid(2048), |x| 0.3 + x * x).unwrap();
    let one = GlobalObservable::pointwise("one", |_| 1.0, 1.0);
    let got = coupling(&map, &one, &g).unwrap();
    assert!((got - g.mass).abs() <= 1e-9 * g.mass);
}

#[test]
fn coupling_indicator_hand_value() {
    // <1_[1/2,1), x> under the reciprocal density = 1/2
    let map = farey();
    let g = GridDensity::from_fn(&map, unit_grid(4096), |x| x).unwrap();
    let f = indicator_above(0.5);
    let got = coupling(&map, &f, &g).unwrap();
    assert!((got - 0.5).abs() <= 1e-8, "got {got}");
}

#[test]
fn coupling_obeys_the_sup_bound() {
    let map = farey();
    let g = GridDensity::from_fn(&map, unit_grid(2048), |x| x).unwrap();
    for f in [sin_phi(&map).unwrap(), indicator_above(0.3)] {
        let c = coupling(&map, &f, &g).unwrap();
        assert!(c.abs() <= f.sup_bound * g.mass * (1.0 + 1e-9), "{}: {c}", f.label);
    }
}

#[test]
fn mu_distance_identities() {
    let map = farey();
    assert_eq!(mu_distance(&map, 0.3, 0.3), 0.0);
    assert!((mu_distance(&map, 1.0 / std::f64::consts::E, 1.0) - 1.0).abs() < 1e-13);
    assert!(
        (mu_distance(&map, 0.25, 0.5) - mu_distance(&map, 0.5, 0.25)).abs() == 0.0,
        "symmetry"
    );
    let half = pm_halfline();
    assert!((mu_distance(&half, 1.5, 4.0) - 2.5).abs() < 1e-14);
    // triangle equality on collinear triples
    let d = |a: f64, b: f64| mu_distance(&map, a, b);
    assert!((d(0.1, 0.7) - (d(0.1, 0.4) + d(0.4, 0.7))).abs() < 1e-12);
}
