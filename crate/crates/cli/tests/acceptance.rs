//! Acceptance suite: one test per criterion, asserting every clause at
//! its stated tolerance and printing one measured line per clause.
//!
//! Four criteria pin tolerances at fixed iterate counts that the true
//! Theta(1/ln n) decay of these systems cannot meet (5, 6, 9's
//! total-variation clause, 11's sup-norm clause). Those tests run the
//! full computation, print measured-vs-required, and fail honestly; the
//! blocking analysis lives outside the repository. Everything else is
//! green.

use ergomix_core::conjugation::{build_conjugation, conjugate_map};
use ergomix_core::laminar_distortion::{
    build_laminar, check_partition_comparability, estimate_distortion,
};
use ergomix_core::limit_theorems::{
    birkhoff_distribution, build_hitting_partition, h_q, hitting_time,
    simulate_residue_distribution, BirkhoffSchedule,
};
use ergomix_core::map_models::{farey, pm_halfline, pm_quadratic, t_alpha, verify_invariant_density, MapKind, MapModel};
use ergomix_core::mixing_lab::{mc_correlation, run_ggm_counterexample, slicing_decomposition};
use ergomix_core::observables::{
    coupling, estimate_av, sin_half_line, sin_phi, AvSchedule, GlobalObservable,
};
use ergomix_core::transfer::{
    apply_transfer, half_line_grid, iterate_transfer, unit_grid, unit_grid_from, GridDensity,
    IterateOptions,
};
use std::time::Instant;

const SEED: u64 = 20_180_901;

/// Collects clause verdicts so every measurement prints before the
/// criterion fails.
struct Criterion {
    name: &'static str,
    failed: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            failed: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, pass: bool, measured: String) {
        println!(
            "{}: {} {label}: {measured}",
            self.name,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            self.failed.push(format!("{label}: {measured}"));
        }
    }

    fn finish(self) {
        assert!(
            self.failed.is_empty(),
            "{} failed clauses:\n  {}",
            self.name,
            self.failed.join("\n  ")
        );
    }
}

fn unit_models() -> Vec<MapModel> {
    vec![
        farey(),
        t_alpha(0.3).unwrap(),
        t_alpha(0.7).unwrap(),
        pm_quadratic(),
    ]
}

fn seed_linear(map: &MapModel) -> GridDensity {
    GridDensity::from_fn(map, unit_grid(4096), |x| x)
        .unwrap()
        .normalized(map)
        .unwrap()
}

fn seed_quadratic(map: &MapModel) -> GridDensity {
    GridDensity::from_fn(map, unit_grid(4096), |x| x * x)
        .unwrap()
        .normalized(map)
        .unwrap()
}

fn seed_exp(map: &MapModel, rate: f64) -> GridDensity {
    GridDensity::from_fn(map, half_line_grid(4096, 40.0), |s| (-rate * s).exp())
        .unwrap()
        .normalized(map)
        .unwrap()
}

#[test]
fn acceptance_01_invariant_density_identity() {
    let mut c = Criterion::new("criterion 1");
    for map in unit_models() {
        let t0 = Instant::now();
        let r = verify_invariant_density(&map, 4096).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        c.check(
            &format!("transfer identity {}", map.family),
            r <= 1e-10,
            format!("residual {r:e} <= 1e-10"),
        );
        c.check(
            &format!("runtime {}", map.family),
            dt < 1.0,
            format!("{dt:.3} s < 1 s"),
        );
    }
    let half = pm_halfline();
    let t0 = Instant::now();
    let r = verify_invariant_density(&half, 4096).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    c.check("lebesgue identity pm_halfline", r <= 1e-8, format!("residual {r:e} <= 1e-8"));
    c.check("runtime pm_halfline", dt < 1.0, format!("{dt:.3} s < 1 s"));
    c.finish();
}

#[test]
fn acceptance_02_unit_preservation_and_mass() {
    let mut c = Criterion::new("criterion 2");
    // P fixes the constant 1
    for map in [farey(), t_alpha(0.4).unwrap(), pm_quadratic()] {
        let one = GridDensity::from_fn(&map, unit_grid(4096), |_| 1.0).unwrap();
        let p1 = apply_transfer(&map, &one).unwrap();
        let worst = p1.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        c.check(
            &format!("P1 = 1 on {}", map.family),
            worst <= 1e-10,
            format!("sup |P1 - 1| = {worst:e}"),
        );
    }
    let half = pm_halfline();
    let one = GridDensity::from_fn(&half, half_line_grid(4096, 40.0), |_| 1.0).unwrap();
    let p1 = apply_transfer(&half, &one).unwrap();
    let worst = p1.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    c.check("P1 = 1 on pm_halfline", worst <= 1e-10, format!("sup |P1 - 1| = {worst:e}"));

    // mass of random positive densities conserved per step over 200 steps
    let mut lcg = SEED;
    let mut rnd = move || {
        lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (lcg >> 11) as f64 / (1u64 << 53) as f64
    };
    for trial in 0..2 {
        let (a, b, d) = (0.2 + rnd(), 0.2 + rnd(), 0.2 + rnd());
        let map = farey();
        let g = GridDensity::from_fn(&map, unit_grid(4096), |x| a * x + b * x * x + d * x / (1.0 + x)).unwrap();
        let (_, rep) = iterate_transfer(&map, &g, 200, &IterateOptions::default()).unwrap();
        let worst = rep.mass_drift.iter().cloned().fold(0.0, f64::max);
        c.check(
            &format!("farey mass drift trial {trial}"),
            !rep.failed && worst <= 1e-5,
            format!("max per-step drift {worst:e} over 200 steps"),
        );
        let gh = GridDensity::from_fn(&half, half_line_grid(4096, 40.0), |s| {
            (a + b * s) * (-(0.5 + d) * s).exp()
        })
        .unwrap();
        let (_, rep) = iterate_transfer(&half, &gh, 200, &IterateOptions::default()).unwrap();
        let worst = rep.mass_drift.iter().cloned().fold(0.0, f64::max);
        c.check(
            &format!("pm_halfline mass drift trial {trial}"),
            !rep.failed && worst <= 1e-5,
            format!("max per-step drift {worst:e} over 200 steps"),
        );
    }
    c.finish();
}

#[test]
fn acceptance_03_closed_form_transfer_oracle() {
    let mut c = Criterion::new("criterion 3");
    let map = farey();
    let g = GridDensity::from_fn(&map, unit_grid(4096), |x| x).unwrap();
    let t0 = Instant::now();
    let pg = apply_transfer(&map, &g).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let worst = g
        .nodes
        .iter()
        .zip(&pg.values)
        .map(|(&x, &v)| (v - 2.0 * x / ((1.0 + x) * (1.0 + x))).abs())
        .fold(0.0, f64::max);
    c.check("node-exact image vs symbolic", worst <= 1e-9, format!("max deviation {worst:e}"));
    c.check("runtime", dt < 1.0, format!("{dt:.3} s < 1 s"));
    c.finish();
}

#[test]
fn acceptance_04_persistent_monotonicity() {
    let mut c = Criterion::new("criterion 4");
    let t0 = Instant::now();
    for map in unit_models() {
        let g = seed_linear(&map);
        let (_, rep) = iterate_transfer(&map, &g, 50, &IterateOptions::default()).unwrap();
        c.check(
            &format!("increasing 50 iterates {}", map.family),
            rep.monotone_up_to == 50,
            format!("monotone through {}", rep.monotone_up_to),
        );
        c.check(
            &format!("concave 50 iterates {}", map.family),
            rep.concave_up_to == 50,
            format!("concave through {}", rep.concave_up_to),
        );
    }
    let half = pm_halfline();
    let g = seed_exp(&half, 1.0);
    let (_, rep) = iterate_transfer(&half, &g, 50, &IterateOptions::default()).unwrap();
    c.check(
        "decreasing 50 iterates pm_halfline",
        rep.monotone_up_to == 50,
        format!("monotone through {}", rep.monotone_up_to),
    );
    let dt = t0.elapsed().as_secs_f64();
    c.check("runtime", dt < 30.0, format!("{dt:.1} s < 30 s"));
    c.finish();
}

/// c_n at the requested iterates by explicit iteration.
fn couplings_at(
    map: &MapModel,
    f: &GlobalObservable,
    g: &GridDensity,
    at: &[usize],
) -> Vec<f64> {
    let n_max = *at.iter().max().unwrap();
    let mut out = Vec::with_capacity(at.len());
    let mut cur = g.clone();
    for n in 0..=n_max {
        if at.contains(&n) {
            out.push(coupling(map, f, &cur).unwrap());
        }
        if n < n_max {
            cur = apply_transfer(map, &cur).unwrap();
        }
    }
    out
}

#[test]
fn acceptance_05_glm2_trend() {
    let mut c = Criterion::new("criterion 5");
    let t0 = Instant::now();
    // (map, observable, [seed densities]) with known averages
    let runs: Vec<(MapModel, GlobalObservable, Vec<GridDensity>)> = {
        let fa = farey();
        let ta = t_alpha(0.3).unwrap();
        let hl = pm_halfline();
        let f_fa = sin_phi(&fa).unwrap();
        let part = build_hitting_partition(&fa, 2_000_000).unwrap();
        let h3 = h_q(&part, 3).unwrap();
        let f_ta = sin_phi(&ta).unwrap();
        let seeds_fa = vec![seed_linear(&fa), seed_quadratic(&fa)];
        let seeds_ta = vec![seed_linear(&ta), seed_quadratic(&ta)];
        let seeds_hl = vec![seed_exp(&hl, 1.0), seed_exp(&hl, 2.0)];
        vec![
            (farey(), f_fa, seeds_fa.clone()),
            (farey(), h3, seeds_fa),
            (t_alpha(0.3).unwrap(), f_ta, seeds_ta),
            (pm_halfline(), sin_half_line(), seeds_hl),
        ]
    };
    for (map, f, seeds) in &runs {
        for (si, g) in seeds.iter().enumerate() {
            let target = f.known_av.unwrap() * g.mass;
            let cs = couplings_at(map, f, g, &[1, 200]);
            let r1 = (cs[0] - target).abs();
            let r200 = (cs[1] - target).abs();
            let label = format!("{} / {} / seed {si}", map.family, f.label);
            c.check(
                &format!("|c_200 - target| <= 0.05 [{label}]"),
                r200 <= 0.05,
                format!("residual at 200 = {r200:.4}"),
            );
            c.check(
                &format!("residual quarter drop [{label}]"),
                r200 <= 0.25 * r1,
                format!("{r200:.4} vs quarter of r_1 = {:.4}", 0.25 * r1),
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    c.check("runtime", dt < 300.0, format!("{dt:.1} s < 300 s"));
    c.finish();
}

#[test]
fn acceptance_06_zero_type_decay() {
    let mut c = Criterion::new("criterion 6");
    let map = farey();
    let g = seed_linear(&map);
    let f = ergomix_core::observables::indicator_above(0.5);
    let cs = couplings_at(&map, &f, &g, &[0, 200]);
    c.check(
        "c_200 <= 0.1 c_0 (farey, delta = 1/2)",
        cs[1] <= 0.1 * cs[0],
        format!("c_0 = {:.4}, c_200 = {:.4}, ratio {:.4}", cs[0], cs[1], cs[1] / cs[0]),
    );
    c.finish();
}

#[test]
fn acceptance_07_ggm_failure() {
    let mut c = Criterion::new("criterion 7");
    let map = farey();
    let f = sin_phi(&map).unwrap();
    let sched = AvSchedule::unit_geometric(200.0, 16);
    let rows = run_ggm_counterexample(&map, &f, &[1, 5, 20], &sched).unwrap();
    for row in &rows {
        c.check(
            &format!("Av((F o T^{}) F) = 0.5 +- 0.03", row.n),
            (row.estimate.extrapolated - 0.5).abs() <= 0.03,
            format!("estimate {:.4} (squared-limit would be 0)", row.estimate.extrapolated),
        );
    }
    c.finish();
}

#[test]
fn acceptance_08_duality_cross_check() {
    let mut c = Criterion::new("criterion 8");
    let ns = [1u64, 5, 15, 30];
    let mut models = unit_models();
    models.push(pm_halfline());
    for map in &models {
        let (f, g) = match map.kind {
            MapKind::UnitInterval => (sin_phi(map).unwrap(), seed_linear(map)),
            MapKind::HalfLine => (sin_half_line(), seed_exp(map, 1.0)),
        };
        let mc = mc_correlation(map, &f, &g, &ns, 100_000, SEED).unwrap();
        let at: Vec<usize> = ns.iter().map(|&n| n as usize).collect();
        let cs = couplings_at(map, &f, &g, &at);
        for (i, est) in mc.iter().enumerate() {
            let diff = (est.mean * g.mass - cs[i]).abs();
            c.check(
                &format!("{} n = {}", map.family, est.n),
                diff <= 3.0 * est.std_err.max(1e-5),
                format!("|mc - transfer| = {diff:e} vs 3 se = {:e}", 3.0 * est.std_err),
            );
        }
    }
    c.finish();
}

#[test]
fn acceptance_09_hitting_residues() {
    let mut c = Criterion::new("criterion 9");
    let t0 = Instant::now();
    let map = farey();
    let g = seed_linear(&map);
    let d = simulate_residue_distribution(&map, &g, 3, 1000, 100_000, SEED).unwrap();
    c.check(
        "TV to uniform <= 0.02 (q = 3, n = 1000, N = 1e5)",
        d.tv_to_uniform <= 0.02,
        format!("TV = {:.4}, pmf = {:?}", d.tv_to_uniform, d.pmf),
    );
    let part = build_hitting_partition(&map, 120_000).unwrap();
    let h3 = h_q(&part, 3).unwrap();
    let est = estimate_av(&map, &h3, &AvSchedule::step_indices(&part.beta, 24)).unwrap();
    c.check(
        "Av(H_3) = 1.0 +- 0.05",
        (est.extrapolated - 1.0).abs() <= 0.05,
        format!("estimate {:.4}", est.extrapolated),
    );
    let dt = t0.elapsed().as_secs_f64();
    c.check("runtime", dt < 120.0, format!("{dt:.1} s < 120 s"));
    c.finish();
}

// exact rational itinerary helpers for criterion 10
fn rational_from_digits(digits: &[u64]) -> (u128, u128) {
    let (mut p, mut q) = (*digits.last().unwrap() as u128, 1u128);
    for &a in digits.iter().rev().skip(1) {
        let np = a as u128 * p + q;
        q = p;
        p = np;
    }
    (p, q)
}

fn exact_itinerary(mut p: u128, mut q: u128, symbols: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(symbols);
    for _ in 0..symbols {
        out.push(((p + q - 1) / q - 2) as u64);
        if p > 2 * q {
            p -= q;
        } else {
            let t = p - q;
            p = q;
            q = t;
        }
    }
    out
}

fn expected_symbols(digits: &[u64], symbols: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(symbols);
    'outer: for &a in digits {
        for l in (0..a).rev() {
            out.push(l);
            if out.len() == symbols {
                break 'outer;
            }
        }
    }
    out
}

#[test]
fn acceptance_10_farey_oracles() {
    let mut c = Criterion::new("criterion 10");
    let map = farey();
    let part = build_hitting_partition(&map, 2000).unwrap();
    let beta_worst = (0..=2000)
        .map(|k| (part.beta[k] - 1.0 / (k as f64 + 1.0)).abs())
        .fold(0.0, f64::max);
    c.check("beta_k = 1/(k+1)", beta_worst <= 1e-12, format!("max |dev| = {beta_worst:e}"));
    let r_worst = (0..=2000)
        .map(|k| (part.r[k] - ((k as f64 + 2.0) / (k as f64 + 1.0)).ln()).abs())
        .fold(0.0, f64::max);
    c.check("r_k = ln((k+2)/(k+1))", r_worst <= 1e-10, format!("max |dev| = {r_worst:e}"));

    // accelerated vs direct hitting times, exact integer agreement
    let mut mism = 0usize;
    let mut deepest = 0u64;
    for i in 0..10_000 {
        let u = ((i as f64 + 0.5) * 0.754_877_666_246_692_9) % 1.0;
        let x = 1e-4 + (1.0 - 2e-4) * u;
        let fast = hitting_time(&map, x, 1 << 40).unwrap();
        let mut z = x;
        let mut k = 0u64;
        while z < 0.5 {
            z = map.forward(z);
            k += 1;
        }
        if fast != k {
            mism += 1;
        }
        deepest = deepest.max(k);
    }
    c.check(
        "accelerated = direct on 1e4 points",
        mism == 0,
        format!("{mism} mismatches (deepest laminar phase {deepest})"),
    );

    // itinerary / continued-fraction correspondence
    let mut lcg = 88172645463325252u64;
    let mut rnd = move || {
        lcg ^= lcg << 13;
        lcg ^= lcg >> 7;
        lcg ^= lcg << 17;
        lcg
    };
    let mut bad = 0usize;
    for _ in 0..1000 {
        let digits: Vec<u64> = (0..40).map(|_| 1 + rnd() % 6).collect();
        let (p, q) = rational_from_digits(&digits);
        if exact_itinerary(p, q, 100) != expected_symbols(&digits, 100) {
            bad += 1;
        }
    }
    c.check(
        "itinerary spells continued-fraction digits (100 symbols x 1e3 points)",
        bad == 0,
        format!("{bad} disagreements"),
    );
    c.finish();
}

#[test]
fn acceptance_11_birkhoff_non_tightening() {
    let mut c = Criterion::new("criterion 11");
    let t0 = Instant::now();
    let map = farey();
    let f = sin_phi(&map).unwrap();
    let g = seed_linear(&map);
    let theta: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();

    // target by volume averages, then the independent oracle: the
    // characteristic function of the sine of a uniform angle
    let d = map.density().unwrap();
    let (phi, _) = d.clone_antiderivatives().unwrap();
    let sched = AvSchedule::unit_geometric(600.0, 16);
    let mut tre = Vec::new();
    let mut tim = Vec::new();
    for &t in &theta {
        let p1 = phi.clone();
        let fr = GlobalObservable::pointwise("re", move |x| (t * p1(x).sin()).cos(), 1.0);
        let p2 = phi.clone();
        let fi = GlobalObservable::pointwise("im", move |x| (t * p2(x).sin()).sin(), 1.0);
        tre.push(estimate_av(&map, &fr, &sched).unwrap().extrapolated);
        tim.push(estimate_av(&map, &fi, &sched).unwrap().extrapolated);
    }
    let bessel = |t: f64| {
        let m = 4000;
        (0..m)
            .map(|i| {
                let s = std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                (t * s.sin()).cos()
            })
            .sum::<f64>()
            / m as f64
    };
    let oracle_worst = theta
        .iter()
        .enumerate()
        .map(|(i, &t)| (tre[i] - bessel(t)).abs().max(tim[i].abs()))
        .fold(0.0, f64::max);
    c.check(
        "volume-average target matches the Bessel quadrature oracle",
        oracle_worst <= 0.01,
        format!("max |target - J0| = {oracle_worst:e}"),
    );

    for sched_k in [
        BirkhoffSchedule::Fixed(1),
        BirkhoffSchedule::Fixed(10),
        BirkhoffSchedule::SqrtN,
    ] {
        let table = birkhoff_distribution(
            &map, &f, sched_k, 500, &g, 100_000, &theta, SEED, (&tre, &tim),
        )
        .unwrap();
        c.check(
            &format!("sup |phi_hat - phi_X| <= 0.05 (window {})", table.window),
            table.sup_dev <= 0.05,
            format!("sup deviation {:.4} at n = 500", table.sup_dev),
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    c.check("runtime", dt < 300.0, format!("{dt:.1} s < 300 s"));
    c.finish();
}

#[test]
fn acceptance_12_laminar_machinery() {
    let mut c = Criterion::new("criterion 12");
    let t0 = Instant::now();
    let map = pm_halfline();
    let ls = build_laminar(&map, 200).unwrap();

    // v' = u o v by central differences
    let mut vprime_worst = 0.0f64;
    for &t in &[1.0, 5.0, 20.0, 60.0, 150.0] {
        let dt = 1e-4;
        let fd = (ls.v(t + dt).unwrap() - ls.v(t - dt).unwrap()) / (2.0 * dt);
        let expect = map.u(ls.v(t).unwrap());
        vprime_worst = vprime_worst.max(((fd - expect) / expect).abs());
    }
    c.check("v' = u o v", vprime_worst <= 1e-6, format!("max rel dev {vprime_worst:e}"));

    let ident_worst = (1..=200)
        .map(|k| {
            let li = ls.b[k] - ls.b[k - 1];
            ((li - map.u(ls.b[k])) / map.u(ls.b[k])).abs()
        })
        .fold(0.0, f64::max);
    c.check(
        "interval length = displacement",
        ident_worst <= 1e-10,
        format!("max rel dev {ident_worst:e}"),
    );

    let rep = check_partition_comparability(&ls);
    c.check(
        "comparability ratio bounded, no growth over k <= 200",
        rep.stabilized && rep.c1_hat.is_finite(),
        format!("C1_hat = {:.4}", rep.c1_hat),
    );

    let j_list: Vec<usize> = (1..=100).collect();
    let drep = estimate_distortion(&map, &ls, &j_list, 10, SEED).unwrap();
    let early = drep.rows.iter().filter(|r| r.j <= 50).map(|r| r.sup_log_ratio).fold(0.0f64, f64::max);
    let late = drep.rows.iter().filter(|r| r.j > 50).map(|r| r.sup_log_ratio).fold(0.0f64, f64::max);
    c.check(
        "distortion sup flat in depth (1..50 vs 50..100 within 20%)",
        (late - early).abs() <= 0.2 * early.max(late),
        format!("shallow {early:.5} vs deep {late:.5}, C'_hat = {:.4}", drep.cprime_hat),
    );
    let dt = t0.elapsed().as_secs_f64();
    c.check("runtime", dt < 120.0, format!("{dt:.1} s < 120 s"));
    c.finish();
}

#[test]
fn acceptance_13_slicing_bound() {
    let mut c = Criterion::new("criterion 13");
    let map = farey();
    let g = GridDensity::from_fn(&map, unit_grid_from(4096, 1e-19), |x| x)
        .unwrap()
        .normalized(&map)
        .unwrap();
    let f = sin_phi(&map).unwrap();
    for &delta in &[(-20.0f64).exp(), (-40.0f64).exp()] {
        for &n in &[10usize, 50] {
            let r = slicing_decomposition(&map, &f, &g, delta, n).unwrap();
            c.check(
                &format!("actual <= bound at (ln delta = {:.0}, n = {n})", delta.ln()),
                r.actual <= r.total_bound + 1e-9,
                format!(
                    "actual {:.4} vs I1 {:.4} + sup|F| I2 {:.4}",
                    r.actual, r.i1_bound, r.i2_value
                ),
            );
        }
    }
    c.finish();
}

#[test]
fn acceptance_14_cli_determinism() {
    let mut c = Criterion::new("criterion 14");
    let bin = env!("CARGO_BIN_EXE_ergomix");
    let dir = std::env::temp_dir().join("ergomix_accept_14");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = format!(
        "[map]\nfamily = farey\n[experiment]\nname = hitting_residues\n[numerics]\nn_max = 200\nn_samples = 20000\nq = 3\nseed = {SEED}\n"
    );
    let cfg_path = dir.join("run.ini");
    std::fs::write(&cfg_path, cfg).unwrap();
    let mut bodies = Vec::new();
    for pass in 0..2 {
        let out = dir.join(format!("out{pass}"));
        let status = std::process::Command::new(bin)
            .args([
                "--config",
                cfg_path.to_str().unwrap(),
                "--output",
                out.to_str().unwrap(),
            ])
            .env("ERGOMIX_THREADS", if pass == 0 { "1" } else { "4" })
            .output()
            .unwrap();
        assert!(
            status.status.code().is_some(),
            "runner crashed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        bodies.push(std::fs::read(out.join("residues.csv")).unwrap());
    }
    c.check(
        "byte-identical CSV across runs and worker counts",
        bodies[0] == bodies[1],
        format!("{} bytes", bodies[0].len()),
    );
    c.finish();
}
