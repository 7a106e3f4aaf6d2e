//! Mixing experiments: correlation decay of a global against a local
//! observable, zero-type decay, the failure of global-global mixing, and
//! the plateau-slicing bound behind the correlation proof.
//!
//! Correlations are always routed through the transfer operator via the
//! duality <F o T^n, g> = <F, P^n g>; orbit averages near an indifferent
//! fixed point converge far too slowly to be the primary route. Monte
//! Carlo orbit pushforward is kept as an independent cross-check.

use crate::limit_theorems::{advance, run_batches, InverseCdfSampler, LimitError};
use crate::map_models::{MapKind, MapModel};
use crate::numerics::{integrate_cell, NeumaierSum};
use crate::observables::{
    coupling, estimate_av, finite_volume_average, indicator_above, indicator_below, AvEstimate,
    AvSchedule, GlobalObservable, ObsError, DEFAULT_SCHEDULE_DEPTH,
};
use crate::transfer::{apply_transfer, truncate_plateau, GridDensity, TransferError};
use rand::Rng;
use std::fmt;

#[derive(Debug)]
pub enum MixError {
    AvUnavailable { label: String, cauchy_width: f64 },
    MonotonicityLost { n: usize },
    AvNotZero { label: String, av: f64 },
    DeltaInvalid { delta: f64 },
    NeedsClosedForm,
    Obs(ObsError),
    Transfer(TransferError),
    Limit(LimitError),
}

impl fmt::Display for MixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixError::AvUnavailable { label, cauchy_width } => write!(
                f,
                "infinite-volume average of '{label}' did not converge (width {cauchy_width:e})"
            ),
            MixError::MonotonicityLost { n } => {
                write!(f, "iterate {n} lost the monotonicity the decomposition needs")
            }
            MixError::AvNotZero { label, av } => {
                write!(f, "'{label}' must have zero average, has {av}")
            }
            MixError::DeltaInvalid { delta } => write!(f, "cut {delta} not strictly inside the domain"),
            MixError::NeedsClosedForm => {
                f.write_str("experiment needs a closed-form box coordinate for this model")
            }
            MixError::Obs(e) => write!(f, "{e}"),
            MixError::Transfer(e) => write!(f, "{e}"),
            MixError::Limit(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MixError {}

impl From<ObsError> for MixError {
    fn from(e: ObsError) -> Self {
        MixError::Obs(e)
    }
}
impl From<TransferError> for MixError {
    fn from(e: TransferError) -> Self {
        MixError::Transfer(e)
    }
}
impl From<LimitError> for MixError {
    fn from(e: LimitError) -> Self {
        MixError::Limit(e)
    }
}

/// Qualitative trend of the residual sequence. The theory supplies no
/// rates, so the verdict is a least-squares slope of the log residuals
/// over the recorded second half plus a gross head-to-tail comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Converging,
    Stalled,
    Diverging,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Converging => f.write_str("converging"),
            Verdict::Stalled => f.write_str("stalled"),
            Verdict::Diverging => f.write_str("diverging"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorrelationSeries {
    pub n_values: Vec<usize>,
    pub c_n: Vec<f64>,
    /// Av(F) times the mass of g.
    pub target: f64,
    pub residuals: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug)]
pub struct SeriesOptions {
    pub n_max: usize,
    /// Record the coupling every `stride` iterates (plus the endpoints).
    pub stride: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { n_max: 200, stride: 1 }
    }
}

fn default_schedule(map: &MapModel, f: &GlobalObservable) -> AvSchedule {
    match (&f.kind, map.kind) {
        (crate::observables::ObsKind::Step { beta, .. }, _) => {
            AvSchedule::step_indices(beta, 24)
        }
        (_, MapKind::UnitInterval) => AvSchedule::unit_geometric(DEFAULT_SCHEDULE_DEPTH, 64),
        (_, MapKind::HalfLine) => {
            AvSchedule::half_line_geometric(DEFAULT_SCHEDULE_DEPTH, 64)
        }
    }
}

/// Av(F), from the declared value or estimated along the default schedule.
fn resolve_av(map: &MapModel, f: &GlobalObservable) -> Result<f64, MixError> {
    if let Some(av) = f.known_av {
        return Ok(av);
    }
    let est = estimate_av(map, f, &default_schedule(map, f))?;
    if !est.converged {
        return Err(MixError::AvUnavailable {
            label: f.label.clone(),
            cauchy_width: est.cauchy_width,
        });
    }
    Ok(est.extrapolated)
}

fn trend_verdict(ns: &[usize], residuals: &[f64]) -> Verdict {
    if residuals.len() < 4 {
        return Verdict::Stalled;
    }
    let half = residuals.len() / 2;
    let xs: Vec<f64> = ns[half..].iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = residuals[half..]
        .iter()
        .map(|&r| r.max(1e-300).ln())
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let first = residuals[0];
    let last = *residuals.last().unwrap();
    if slope < 0.0 && last < 0.25 * first {
        Verdict::Converging
    } else if slope > 0.0 && last > 2.0 * first.max(1e-300) {
        Verdict::Diverging
    } else {
        Verdict::Stalled
    }
}

/// Correlation series c_n = <F, P^n g> against the limit Av(F) mass(g).
pub fn run_glm2(
    map: &MapModel,
    f: &GlobalObservable,
    g: &GridDensity,
    opts: &SeriesOptions,
) -> Result<CorrelationSeries, MixError> {
    let av = resolve_av(map, f)?;
    let target = av * g.mass;
    let stride = opts.stride.max(1);
    let mut n_values = Vec::new();
    let mut c_n = Vec::new();
    let mut current = g.clone();
    for n in 0..=opts.n_max {
        if n % stride == 0 || n == opts.n_max {
            n_values.push(n);
            c_n.push(coupling(map, f, &current)?);
        }
        if n < opts.n_max {
            current = apply_transfer(map, &current)?;
        }
    }
    let residuals: Vec<f64> = c_n.iter().map(|c| (c - target).abs()).collect();
    let verdict = trend_verdict(&n_values, &residuals);
    Ok(CorrelationSeries {
        n_values,
        c_n,
        target,
        residuals,
        verdict,
    })
}

/// Zero-type series: mass of the iterated density inside a fixed
/// finite-measure window, which must die out.
pub fn run_llm(
    map: &MapModel,
    delta: f64,
    g: &GridDensity,
    opts: &SeriesOptions,
) -> Result<CorrelationSeries, MixError> {
    let f = match map.kind {
        MapKind::UnitInterval => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(MixError::DeltaInvalid { delta });
            }
            indicator_above(delta)
        }
        MapKind::HalfLine => {
            if !(delta > 0.0) {
                return Err(MixError::DeltaInvalid { delta });
            }
            indicator_below(delta)
        }
    };
    run_glm2(map, &f, g, opts)
}

// ---------------------------------------------------------------------------
// Failure of global-global mixing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GgmRow {
    pub n: u64,
    pub estimate: AvEstimate,
}

/// Fine panel width inside the chaotic window of the box coordinate.
const GGM_FINE_PANEL: f64 = 0.005;
const GGM_COARSE_PANEL: f64 = 0.25;

/// Estimate Av((F o T^n) F) by finite-volume averages for each n. Under
/// global-global mixing this would approach Av(F)^2; instead it sticks
/// at Av(F^2), because in the bulk of every large box T^n is still close
/// to the identity in the measure metric.
///
/// Works in the box coordinate s where the measure is Lebesgue. Near the
/// origin of that coordinate the orbit s -> Phi(T(Phi^{-1}(s))) mixes
/// genuinely and the integrand oscillates at fine scales, so panels are
/// small up to ln(4n) + 4 and coarse beyond, where the n-step orbit is
/// purely laminar and the integrand is as smooth as F itself.
pub fn run_ggm_counterexample(
    map: &MapModel,
    f: &GlobalObservable,
    n_list: &[u64],
    schedule: &AvSchedule,
) -> Result<Vec<GgmRow>, MixError> {
    // orbit step and F in the box coordinate
    let (step_s, eval_s): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match map.kind {
        MapKind::HalfLine => (
            Box::new(|s| map.forward(s)),
            Box::new(move |s| f.eval(s)),
        ),
        MapKind::UnitInterval => {
            let d = map.density().map_err(|_| MixError::NeedsClosedForm)?;
            let (phi, phi_inv) = d
                .clone_antiderivatives()
                .ok_or(MixError::NeedsClosedForm)?;
            let (phi2, phi_inv2) = (phi.clone(), phi_inv.clone());
            (
                Box::new(move |s: f64| phi(map.forward(phi_inv(s)))),
                Box::new(move |s: f64| {
                    let _ = &phi2;
                    f.eval(phi_inv2(s))
                }),
            )
        }
    };
    // schedule cuts in the box coordinate, ascending
    let mut depths: Vec<f64> = match map.kind {
        MapKind::HalfLine => schedule.cuts.clone(),
        MapKind::UnitInterval => {
            let d = map.density().map_err(|_| MixError::NeedsClosedForm)?;
            let (phi, _) = d.clone_antiderivatives().ok_or(MixError::NeedsClosedForm)?;
            schedule.cuts.iter().map(|&a| phi(a)).collect()
        }
    };
    depths.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let orbit_n = |s: f64| {
            let mut t = s;
            for _ in 0..n {
                t = step_s(t);
            }
            t
        };
        let integrand = |s: f64| eval_s(orbit_n(s)) * eval_s(s);
        let wild_end = (4.0 * (n.max(1)) as f64).ln() + 4.0;
        let deepest = *depths.last().unwrap();
        // one sweep, recording the running integral at each cut
        let mut values = Vec::with_capacity(depths.len());
        let mut acc = NeumaierSum::new();
        let mut s0 = 0.0f64;
        for &cut in &depths {
            while s0 < cut {
                let w = if s0 < wild_end { GGM_FINE_PANEL } else { GGM_COARSE_PANEL };
                let s1 = (s0 + w).min(cut);
                acc.add(integrate_cell(&integrand, s0.max(1e-12), s1));
                s0 = s1;
            }
            values.push(acc.value() / cut);
        }
        let tail_start = values.len() - (values.len() / 4).max(2);
        let (lo, hi) = values[tail_start..]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let _ = deepest;
        rows.push(GgmRow {
            n,
            estimate: AvEstimate {
                schedule: depths.clone(),
                values: values.clone(),
                extrapolated: *values.last().unwrap(),
                cauchy_width: hi - lo,
                converged: hi - lo <= schedule.tolerance,
            },
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Plateau slicing bound
// ---------------------------------------------------------------------------

/// Certificate that the correlation at time n obeys the slicing bound:
/// clip the iterated density at its value at delta, bound the clipped
/// part by horizontal slices (each slice is a box average of F), and
/// bound the remainder by its mass in [delta, 1).
#[derive(Clone, Debug)]
pub struct SlicingBoundReport {
    pub delta: f64,
    pub n: usize,
    pub i1_bound: f64,
    pub i2_value: f64,
    pub total_bound: f64,
    pub actual: f64,
}

const SLICE_COUNT: usize = 256;

pub fn slicing_decomposition(
    map: &MapModel,
    f: &GlobalObservable,
    g: &GridDensity,
    delta: f64,
    n: usize,
) -> Result<SlicingBoundReport, MixError> {
    match f.known_av {
        Some(0.0) => {}
        Some(av) => {
            return Err(MixError::AvNotZero {
                label: f.label.clone(),
                av,
            })
        }
        None => {
            let av = resolve_av(map, f)?;
            if av.abs() > 1e-6 {
                return Err(MixError::AvNotZero {
                    label: f.label.clone(),
                    av,
                });
            }
        }
    }
    if !g.flags.increasing {
        return Err(MixError::MonotonicityLost { n: 0 });
    }
    let mut current = g.clone();
    for step in 1..=n {
        current = apply_transfer(map, &current)?;
        if !current.flags.increasing {
            return Err(MixError::MonotonicityLost { n: step });
        }
    }
    let gamma = truncate_plateau(map, &current, delta)?;
    let top = *current.nodes.last().unwrap();
    let cum_p = current.cumulative(map);
    let cum_g = gamma.cumulative(map);
    let i2 = (cum_p.between(map, delta, top) - cum_g.between(map, delta, top)).max(0.0);

    // horizontal slices of the clipped density: each level r corresponds
    // to the box [gamma^{-1}(r), 1) and contributes its F-average
    let plateau = current.eval(delta);
    let mut sup_box_avg = 0.0f64;
    for i in 0..SLICE_COUNT {
        let r = plateau * (i as f64 + 0.5) / SLICE_COUNT as f64;
        let a = grid_monotone_inverse(&gamma, r);
        let v = finite_volume_average(map, f, a.clamp(1e-300, 1.0 - 1e-16))?;
        sup_box_avg = sup_box_avg.max(v.abs());
    }
    let i1_bound = sup_box_avg * gamma.mass;
    let actual = coupling(map, f, &current)?.abs();
    Ok(SlicingBoundReport {
        delta,
        n,
        i1_bound,
        i2_value: i2,
        total_bound: i1_bound + f.sup_bound * i2,
        actual,
    })
}

/// Generalized inverse of an increasing grid function: smallest x with
/// value >= r (linear within the bracketing cell).
fn grid_monotone_inverse(g: &GridDensity, r: f64) -> f64 {
    let v = &g.values;
    if r <= v[0] {
        return g.nodes[0];
    }
    let idx = v.partition_point(|&t| t < r);
    if idx >= v.len() {
        return *g.nodes.last().unwrap();
    }
    let (x0, x1) = (g.nodes[idx - 1], g.nodes[idx]);
    let (v0, v1) = (v[idx - 1], v[idx]);
    if v1 <= v0 {
        return x0;
    }
    x0 + (r - v0) / (v1 - v0) * (x1 - x0)
}

// ---------------------------------------------------------------------------
// Monte Carlo cross-check
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub n: u64,
    pub mean: f64,
    pub std_err: f64,
}

/// Expectation of F after n steps under the probability law with density
/// g, for each requested n, by pushing samples along laminar-accelerated
/// orbits. Multiply by mass(g) to compare against the coupling.
pub fn mc_correlation(
    map: &MapModel,
    f: &GlobalObservable,
    g: &GridDensity,
    ns: &[u64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>, MixError> {
    let mut ns_sorted: Vec<u64> = ns.to_vec();
    ns_sorted.sort_unstable();
    let sampler = InverseCdfSampler::build(map, g);
    let m = ns_sorted.len();
    let partials: Vec<Result<(Vec<f64>, Vec<f64>), LimitError>> =
        run_batches(n_samples, seed, |rng, count| {
            let mut sums = vec![0.0f64; m];
            let mut sq = vec![0.0f64; m];
            for _ in 0..count {
                let mut x = sampler.sample(rng.random::<f64>());
                let mut done = 0u64;
                for (i, &target_n) in ns_sorted.iter().enumerate() {
                    x = advance(map, x, target_n - done)?;
                    done = target_n;
                    let v = f.eval(x);
                    sums[i] += v;
                    sq[i] += v * v;
                }
            }
            Ok((sums, sq))
        });
    let mut sums = vec![0.0f64; m];
    let mut sq = vec![0.0f64; m];
    for p in partials {
        let (ps, pq) = p?;
        for i in 0..m {
            sums[i] += ps[i];
            sq[i] += pq[i];
        }
    }
    let n = n_samples as f64;
    Ok(ns_sorted
        .iter()
        .enumerate()
        .map(|(i, &nn)| {
            let mean = sums[i] / n;
            let var = ((sq[i] - n * mean * mean) / (n - 1.0)).max(0.0);
            McEstimate {
                n: nn,
                mean,
                std_err: (var / n).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
#[path = "mixing_lab_tests.rs"]
mod tests;
