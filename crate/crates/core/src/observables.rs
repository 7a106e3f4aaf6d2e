//! Global observables, finite-volume averages, and the coupling between
//! global and local observables.
//!
//! A global observable is a bounded function whose averages over growing
//! boxes converge: boxes are [a, 1) under the infinite invariant measure
//! on the unit interval, (0, a] under Lebesgue on the half-line. Step
//! observables over hitting-time level sets carry their partition data
//! and are averaged by exact partial sums rather than quadrature: their
//! level sets accumulate too fast at the indifferent end for any sampler
//! to see.

use crate::map_models::{MapKind, MapModel, RealFn};
use crate::numerics::quad::QuadError;
use crate::numerics::{integrate_cell, integrate_geometric, quad::SingularEnd, NeumaierSum};
use crate::transfer::GridDensity;
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub enum ObsError {
    Quadrature(QuadError),
    ScheduleTooShort { steps: usize, minimum: usize },
    CutOutOfRange { a: f64 },
    StepTableExhausted { needed_below: f64 },
    StepNeedsUnitInterval,
    MissingClosedForm { what: &'static str },
}

impl fmt::Display for ObsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsError::Quadrature(e) => write!(f, "observable quadrature: {e}"),
            ObsError::ScheduleTooShort { steps, minimum } => {
                write!(f, "schedule has {steps} steps, needs >= {minimum}")
            }
            ObsError::CutOutOfRange { a } => write!(f, "box cut {a} outside the domain"),
            ObsError::StepTableExhausted { needed_below } => write!(
                f,
                "step observable table does not reach down to {needed_below:e}"
            ),
            ObsError::StepNeedsUnitInterval => {
                f.write_str("step observables live on unit-interval models")
            }
            ObsError::MissingClosedForm { what } => {
                write!(f, "model density lacks a closed-form {what}")
            }
        }
    }
}

impl std::error::Error for ObsError {}

impl From<QuadError> for ObsError {
    fn from(e: QuadError) -> Self {
        ObsError::Quadrature(e)
    }
}

/// How the observable is evaluated and averaged.
pub enum ObsKind {
    /// Plain bounded evaluator; `breakpoints` mark jump discontinuities
    /// that quadrature must split at.
    Pointwise { eval: RealFn, breakpoints: Vec<f64> },
    /// Constant on each hitting-time level set B_k = (beta[k+1], beta[k]),
    /// taking value `residue_values[k mod q]`.
    Step {
        beta: Arc<Vec<f64>>,
        masses: Arc<Vec<f64>>,
        residue_values: Arc<Vec<f64>>,
        q: usize,
    },
}

pub struct GlobalObservable {
    pub label: String,
    pub kind: ObsKind,
    /// Declared sup norm.
    pub sup_bound: f64,
    /// Exact infinite-volume average when known.
    pub known_av: Option<f64>,
    pub d_mu_uniformly_continuous: Option<bool>,
}

impl GlobalObservable {
    pub fn pointwise(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sup_bound: f64,
    ) -> Self {
        Self {
            label: label.into(),
            kind: ObsKind::Pointwise {
                eval: Arc::new(eval),
                breakpoints: Vec::new(),
            },
            sup_bound,
            known_av: None,
            d_mu_uniformly_continuous: None,
        }
    }

    pub fn with_known_av(mut self, av: f64) -> Self {
        self.known_av = Some(av);
        self
    }

    pub fn with_breakpoints(mut self, pts: Vec<f64>) -> Self {
        if let ObsKind::Pointwise { breakpoints, .. } = &mut self.kind {
            *breakpoints = pts;
        }
        self
    }

    pub fn with_d_mu_uniform_continuity(mut self, yes: bool) -> Self {
        self.d_mu_uniformly_continuous = Some(yes);
        self
    }

    /// Evaluate at a point. Step observables below their tabulated range
    /// return the exact average of the residue values (their local mean).
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            ObsKind::Pointwise { eval, .. } => eval(x),
            ObsKind::Step {
                beta,
                residue_values,
                q,
                ..
            } => {
                if x >= beta[0] {
                    return residue_values[0];
                }
                if x <= *beta.last().unwrap() {
                    return residue_values.iter().sum::<f64>() / *q as f64;
                }
                // beta is strictly decreasing; find k with x in (beta[k+1], beta[k]]
                let k = match beta
                    .binary_search_by(|b| x.partial_cmp(b).unwrap())
                {
                    Ok(i) => i.saturating_sub(1),
                    Err(i) => i - 1,
                };
                residue_values[k % q]
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-volume averages
// ---------------------------------------------------------------------------

const PANEL_WIDTH: f64 = 0.25;

/// Composite Gauss integration of f over [lo, hi] with fixed-width
/// panels, split at the given breakpoints.
fn composite_panels(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    width: f64,
    breakpoints: &[f64],
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = NeumaierSum::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / width).ceil().max(1.0) as usize;
        for i in 0..n {
            let pa = a + (b - a) * i as f64 / n as f64;
            let pb = a + (b - a) * (i + 1) as f64 / n as f64;
            total.add(integrate_cell(f, pa, pb));
        }
    }
    total.value()
}

/// Integral of F over [a, 1) against the invariant measure of a
/// unit-interval model. Uses the coordinate where the measure is
/// Lebesgue when the density affords it, so the integrand stays bounded
/// near the singular end.
fn integral_over_box_unit(map: &MapModel, f: &GlobalObservable, a: f64) -> Result<f64, ObsError> {
    let d = map.density.as_ref().expect("unit-interval model has a density");
    match &f.kind {
        ObsKind::Pointwise { eval, breakpoints } => {
            if let (Some((phi, phi_inv)), true) = (d.clone_antiderivatives(), true) {
                let top = phi(a);
                let eval = eval.clone();
                let g = move |s: f64| eval(phi_inv(s));
                let bps: Vec<f64> = breakpoints.iter().map(|&b| phi(b)).collect();
                Ok(composite_panels(&g, 0.0, top, PANEL_WIDTH, &bps))
            } else {
                let eval = eval.clone();
                let h = d.clone_evaluators().0;
                Ok(integrate_geometric(
                    &move |x| eval(x) * h(x),
                    a,
                    1.0,
                    SingularEnd::Lower,
                    1e-10,
                    1e-12,
                )?)
            }
        }
        ObsKind::Step {
            beta,
            masses,
            residue_values,
            q,
        } => {
            if a < *beta.last().unwrap() {
                return Err(ObsError::StepTableExhausted { needed_below: a });
            }
            // full level sets above a, then the partial one containing a
            let mut acc = NeumaierSum::new();
            let mut k = 0usize;
            while k + 1 < beta.len() && beta[k + 1] >= a {
                acc.add(residue_values[k % q] * masses[k]);
                k += 1;
            }
            if k < beta.len() && a < beta[k] {
                acc.add(residue_values[k % q] * map.measure_interval(a, beta[k]));
            }
            Ok(acc.value())
        }
    }
}

/// Normalized average of F over the box [a, 1) (unit interval) or
/// (0, a] (half-line).
pub fn finite_volume_average(
    map: &MapModel,
    f: &GlobalObservable,
    a: f64,
) -> Result<f64, ObsError> {
    match map.kind {
        MapKind::UnitInterval => {
            if !(a > 0.0 && a < 1.0) {
                return Err(ObsError::CutOutOfRange { a });
            }
            let volume = map.measure_interval(a, 1.0);
            Ok(integral_over_box_unit(map, f, a)? / volume)
        }
        MapKind::HalfLine => {
            if !(a > 0.0) {
                return Err(ObsError::CutOutOfRange { a });
            }
            match &f.kind {
                ObsKind::Pointwise { eval, breakpoints } => {
                    let eval = eval.clone();
                    let g = move |s: f64| eval(s);
                    Ok(composite_panels(&g, 0.0, a, PANEL_WIDTH, breakpoints) / a)
                }
                ObsKind::Step { .. } => Err(ObsError::StepNeedsUnitInterval),
            }
        }
    }
}

/// Volume schedule for infinite-volume extrapolation.
#[derive(Clone, Debug)]
pub struct AvSchedule {
    /// Box cuts: decreasing toward 0 (unit interval) or increasing
    /// toward infinity (half-line).
    pub cuts: Vec<f64>,
    /// Cauchy-width threshold for the convergence verdict.
    pub tolerance: f64,
}

pub const DEFAULT_AV_TOLERANCE: f64 = 0.02;
/// Default schedule depth in e-folds of the box cut.
pub const DEFAULT_SCHEDULE_DEPTH: f64 = 200.0;

impl AvSchedule {
    /// Unit interval: a_k = exp(-depth * k / steps), k = 1..=steps.
    pub fn unit_geometric(depth_e_folds: f64, steps: usize) -> Self {
        let cuts = (1..=steps)
            .map(|k| (-depth_e_folds * k as f64 / steps as f64).exp())
            .collect();
        Self {
            cuts,
            tolerance: DEFAULT_AV_TOLERANCE,
        }
    }

    /// Half-line: a_k geometric from 1 up to a_max.
    pub fn half_line_geometric(a_max: f64, steps: usize) -> Self {
        let cuts = (1..=steps)
            .map(|k| a_max.powf(k as f64 / steps as f64))
            .collect();
        Self {
            cuts,
            tolerance: DEFAULT_AV_TOLERANCE,
        }
    }

    /// Schedule through the tabulated level-set endpoints of a step
    /// observable: cuts at beta_k for geometrically growing k.
    pub fn step_indices(beta: &[f64], steps: usize) -> Self {
        let k_max = beta.len() - 1;
        let cuts = (1..=steps)
            .map(|i| {
                let k = ((k_max as f64).powf(i as f64 / steps as f64)).round() as usize;
                beta[k.clamp(1, k_max)]
            })
            .collect();
        Self {
            cuts,
            tolerance: DEFAULT_AV_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }
}

/// Finite-volume average sequence along a schedule with a Cauchy-width
/// convergence verdict. No extrapolation beyond the deepest box: the
/// limit may oscillate slowly and acceleration would invent a value.
#[derive(Clone, Debug)]
pub struct AvEstimate {
    pub schedule: Vec<f64>,
    pub values: Vec<f64>,
    /// Value at the deepest box.
    pub extrapolated: f64,
    /// Max oscillation over the last quarter of the schedule.
    pub cauchy_width: f64,
    pub converged: bool,
}

pub fn estimate_av(
    map: &MapModel,
    f: &GlobalObservable,
    schedule: &AvSchedule,
) -> Result<AvEstimate, ObsError> {
    if schedule.cuts.len() < 8 {
        return Err(ObsError::ScheduleTooShort {
            steps: schedule.cuts.len(),
            minimum: 8,
        });
    }
    let values: Vec<f64> = schedule
        .cuts
        .iter()
        .map(|&a| finite_volume_average(map, f, a))
        .collect::<Result<_, _>>()?;
    let tail_start = values.len() - (values.len() / 4).max(2);
    let tail = &values[tail_start..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
        (l.min(v), h.max(v))
    });
    let cauchy_width = hi - lo;
    Ok(AvEstimate {
        schedule: schedule.cuts.clone(),
        values: values.clone(),
        extrapolated: *values.last().unwrap(),
        cauchy_width,
        converged: cauchy_width <= schedule.tolerance,
    })
}

// ---------------------------------------------------------------------------
// Coupling
// ---------------------------------------------------------------------------

/// Hard cap on the level-set walk in step couplings.
const STEP_WALK_CAP: usize = 4_000_000;
/// Stop the walk once the remaining mass is this small (relative).
const STEP_TAIL_TOL: f64 = 1e-7;

/// Integral product of a global observable and a grid density against
/// the model's reference measure.
pub fn coupling(map: &MapModel, f: &GlobalObservable, g: &GridDensity) -> Result<f64, ObsError> {
    match &f.kind {
        ObsKind::Pointwise { eval, breakpoints } => {
            let interp = g.interpolant();
            let weight = |x: f64| match map.kind {
                MapKind::UnitInterval => map.h(x),
                MapKind::HalfLine => 1.0,
            };
            let mut total = NeumaierSum::new();
            for k in 0..interp.n_cells() {
                let (a, b) = interp.cell_bounds(k);
                let inner: Vec<f64> = breakpoints
                    .iter()
                    .copied()
                    .filter(|&p| p > a && p < b)
                    .collect();
                let mut cuts = vec![a];
                cuts.extend_from_slice(&inner);
                cuts.push(b);
                cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                for w in cuts.windows(2) {
                    total.add(integrate_cell(
                        &|x| eval(x) * interp.eval_in_cell(k, x) * weight(x),
                        w[0],
                        w[1],
                    ));
                }
            }
            Ok(total.value())
        }
        ObsKind::Step {
            beta,
            residue_values,
            q,
            ..
        } => {
            if map.kind != MapKind::UnitInterval {
                return Err(ObsError::StepNeedsUnitInterval);
            }
            // Walk the level sets downward, reading their masses from the
            // cumulative profile of g. Below the cutoff the observable is
            // replaced by its local mean: the level sets there are finer
            // than anything the grid resolves, and the residue masses
            // equidistribute at that scale.
            let cum = g.cumulative(map);
            let total_mass = cum.total();
            let mut acc = NeumaierSum::new();
            let mut upper = cum.below(map, beta[0]);
            acc.add(residue_values[0] * (total_mass - upper));
            let mut b = beta[0];
            let mut k = 0usize;
            loop {
                let b_next = if k + 1 < beta.len() {
                    beta[k + 1]
                } else {
                    map.inverse(0, b)
                };
                let lower = cum.below(map, b_next);
                acc.add(residue_values[k % q] * (upper - lower));
                upper = lower;
                b = b_next;
                k += 1;
                if lower <= STEP_TAIL_TOL * total_mass || k >= STEP_WALK_CAP {
                    let mean = residue_values.iter().sum::<f64>() / *q as f64;
                    acc.add(mean * lower);
                    break;
                }
            }
            Ok(acc.value())
        }
    }
}

/// Measure of the closed interval between two points: the metric in
/// which these systems are uniformly continuous.
pub fn mu_distance(map: &MapModel, x: f64, y: f64) -> f64 {
    map.measure_interval(x.min(y), x.max(y))
}

// ---------------------------------------------------------------------------
// Stock observables
// ---------------------------------------------------------------------------

/// sin composed with the box coordinate of a unit-interval model
/// (average zero; uniformly continuous in the measure metric).
pub fn sin_phi(map: &MapModel) -> Result<GlobalObservable, ObsError> {
    let d = map
        .density
        .as_ref()
        .ok_or(ObsError::MissingClosedForm { what: "density" })?;
    let (phi, _) = d
        .clone_antiderivatives()
        .ok_or(ObsError::MissingClosedForm {
            what: "antiderivative",
        })?;
    Ok(
        GlobalObservable::pointwise("sin_phi", move |x| phi(x).sin(), 1.0)
            .with_known_av(0.0)
            .with_d_mu_uniform_continuity(true),
    )
}

/// Square of `sin_phi` (average one half).
pub fn sin_sq_phi(map: &MapModel) -> Result<GlobalObservable, ObsError> {
    let d = map
        .density
        .as_ref()
        .ok_or(ObsError::MissingClosedForm { what: "density" })?;
    let (phi, _) = d
        .clone_antiderivatives()
        .ok_or(ObsError::MissingClosedForm {
            what: "antiderivative",
        })?;
    Ok(
        GlobalObservable::pointwise("sin_sq_phi", move |x| phi(x).sin().powi(2), 1.0)
            .with_known_av(0.5)
            .with_d_mu_uniform_continuity(true),
    )
}

/// Plain sine on the half-line (average zero).
pub fn sin_half_line() -> GlobalObservable {
    GlobalObservable::pointwise("sin", |s| s.sin(), 1.0)
        .with_known_av(0.0)
        .with_d_mu_uniform_continuity(true)
}

/// Indicator of [delta, 1) on the unit interval: a local observable in
/// global clothing, used for zero-type runs.
pub fn indicator_above(delta: f64) -> GlobalObservable {
    GlobalObservable::pointwise(
        format!("indicator_above({delta})"),
        move |x| if x >= delta { 1.0 } else { 0.0 },
        1.0,
    )
    .with_breakpoints(vec![delta])
    .with_known_av(0.0)
}

/// Indicator of (0, delta] on the half-line.
pub fn indicator_below(delta: f64) -> GlobalObservable {
    GlobalObservable::pointwise(
        format!("indicator_below({delta})"),
        move |s| if s <= delta { 1.0 } else { 0.0 },
        1.0,
    )
    .with_breakpoints(vec![delta])
    .with_known_av(0.0)
}

#[cfg(test)]
#[path = "observables_tests.rs"]
mod tests;
