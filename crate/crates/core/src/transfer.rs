//! Grid densities and the transfer operator.
//!
//! A `GridDensity` holds nonnegative values on a fixed strictly increasing
//! node set, read off between nodes by the shape-preserving cubic
//! interpolant. The operator is applied node-exactly: (Pg)(x_i) is
//! assembled from closed-form inverse branches and their derivatives,
//! with interpolation used only to read g at the preimages. On the unit
//! interval the weights carry the invariant density,
//!
//! ```text
//! (Pg)(x) = (1/h(x)) sum_j |psi_j'(x)| h(psi_j(x)) g(psi_j(x)),
//! ```
//!
//! while Lebesgue-preserving half-line models drop the h factors. No
//! transition matrix is ever formed; monotone structure survives because
//! the weights and query points are exact.

use crate::map_models::{MapKind, MapModel};
use crate::numerics::interp::InterpError;
use crate::numerics::{shape, MonotoneCubic};
use std::fmt;
use std::sync::Arc;

/// Default node count for production grids.
pub const DEFAULT_GRID_SIZE: usize = 4096;
/// Relative mass drift allowed per operator application.
pub const DEFAULT_MASS_TOL: f64 = 1e-5;
/// Divided-difference tolerance for monotonicity/concavity flags.
pub const SHAPE_TOL: f64 = 1e-8;
/// Innermost node of the unit-interval grid.
const UNIT_EDGE: f64 = 1e-12;
/// Innermost node of the half-line grid.
const HALF_EDGE: f64 = 1e-9;
/// Default half-line cutoff: tail mass of the canonical seeds below 1e-8.
pub const DEFAULT_X_MAX: f64 = 40.0;

#[derive(Clone, Debug, PartialEq)]
pub enum TransferError {
    NegativeValue { index: usize, value: f64 },
    EmptyMass,
    NodeCountTooSmall(usize),
    DeltaOutsideRange { delta: f64, lo: f64, hi: f64 },
    NotMonotoneIncreasing,
    NotInCone { reason: String },
    WrongKind { expected: MapKind },
    Interp(InterpError),
}

impl fmt::Display for TransferError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferError::NegativeValue { index, value } => {
                write!(f, "density value {value:e} at node {index} is negative")
            }
            TransferError::EmptyMass => f.write_str("density has no mass"),
            TransferError::NodeCountTooSmall(n) => write!(f, "grid needs >= 16 nodes, got {n}"),
            TransferError::DeltaOutsideRange { delta, lo, hi } => {
                write!(f, "cut point {delta} outside node range [{lo:e}, {hi:e}]")
            }
            TransferError::NotMonotoneIncreasing => {
                f.write_str("operation requires a monotone increasing density")
            }
            TransferError::NotInCone { reason } => write!(f, "density not in the cone: {reason}"),
            TransferError::WrongKind { expected } => {
                write!(f, "operation requires a {expected:?} model")
            }
            TransferError::Interp(e) => write!(f, "interpolation: {e}"),
        }
    }
}

impl std::error::Error for TransferError {}

impl From<InterpError> for TransferError {
    fn from(e: InterpError) -> Self {
        TransferError::Interp(e)
    }
}

/// Measured shape of the node values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShapeFlags {
    pub increasing: bool,
    pub decreasing: bool,
    pub concave: bool,
}

/// Nonnegative function tabulated on a fixed grid, with its measure-mass
/// and measured shape flags.
#[derive(Clone, Debug)]
pub struct GridDensity {
    pub nodes: Arc<Vec<f64>>,
    pub values: Vec<f64>,
    /// Integral against the model's reference measure.
    pub mass: f64,
    /// Interpolation rule identifier.
    pub interp: &'static str,
    pub flags: ShapeFlags,
}

/// Weight of the reference measure against Lebesgue at x.
fn measure_weight(map: &MapModel, x: f64) -> f64 {
    match map.kind {
        MapKind::UnitInterval => map.h(x),
        MapKind::HalfLine => 1.0,
    }
}

impl GridDensity {
    /// Wrap node values, computing mass by per-cell Gauss quadrature of
    /// the interpolant against the model's measure, and measuring flags.
    pub fn from_values(
        map: &MapModel,
        nodes: Arc<Vec<f64>>,
        values: Vec<f64>,
    ) -> Result<Self, TransferError> {
        if nodes.len() < 16 {
            return Err(TransferError::NodeCountTooSmall(nodes.len()));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(TransferError::NegativeValue { index: i, value: v });
        }
        let interp = MonotoneCubic::new(&nodes, &values)?;
        let mass = interp.integral_weighted(&|x| measure_weight(map, x));
        let flags = measure_flags(&nodes, &values);
        Ok(Self {
            nodes,
            values,
            mass,
            interp: "monotone_cubic",
            flags,
        })
    }

    /// Tabulate a function on the given nodes.
    pub fn from_fn(
        map: &MapModel,
        nodes: Arc<Vec<f64>>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, TransferError> {
        let values: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        Self::from_values(map, nodes, values)
    }

    /// Wrap node values with mass taken against plain Lebesgue measure,
    /// independent of any model.
    pub fn from_values_lebesgue(
        nodes: Arc<Vec<f64>>,
        values: Vec<f64>,
    ) -> Result<Self, TransferError> {
        if nodes.len() < 16 {
            return Err(TransferError::NodeCountTooSmall(nodes.len()));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(TransferError::NegativeValue { index: i, value: v });
        }
        let interp = MonotoneCubic::new(&nodes, &values)?;
        let mass = interp.integral_weighted(&|_| 1.0);
        let flags = measure_flags(&nodes, &values);
        Ok(Self {
            nodes,
            values,
            mass,
            interp: "monotone_cubic",
            flags,
        })
    }

    pub fn interpolant(&self) -> MonotoneCubic {
        MonotoneCubic::new(&self.nodes, &self.values).expect("grid density nodes are valid")
    }

    /// Read the density at x (constant beyond the node range).
    pub fn eval(&self, x: f64) -> f64 {
        self.interpolant().eval(x)
    }

    /// Same density scaled to unit mass.
    pub fn normalized(&self, map: &MapModel) -> Result<Self, TransferError> {
        if !(self.mass > 0.0) {
            return Err(TransferError::EmptyMass);
        }
        let c = 1.0 / self.mass;
        let values: Vec<f64> = self.values.iter().map(|v| v * c).collect();
        Self::from_values(map, self.nodes.clone(), values)
    }

    /// Cumulative mass profile for sampling and tail queries.
    pub fn cumulative(&self, map: &MapModel) -> CumulativeMass {
        let interp = self.interpolant();
        let h = |x: f64| measure_weight(map, x);
        let cum = interp.cumulative_weighted(&h);
        CumulativeMass {
            nodes: self.nodes.clone(),
            interp,
            cum,
            weight_is_density: map.kind == MapKind::UnitInterval,
        }
    }
}

/// Shape is judged on the interior nodes only: values at the outermost
/// nodes depend on constant extrapolation of reads that fall off the
/// grid, and that model error (order of the first cell squared) is
/// invisible to divided differences on the interior.
fn interior<'a>(a: &'a [f64]) -> &'a [f64] {
    if a.len() > 4 {
        &a[1..a.len() - 1]
    } else {
        a
    }
}

fn measure_flags(nodes: &[f64], values: &[f64]) -> ShapeFlags {
    let (x, v) = (interior(nodes), interior(values));
    ShapeFlags {
        increasing: shape::check_increasing(x, v, SHAPE_TOL).is_none(),
        decreasing: shape::check_decreasing(x, v, SHAPE_TOL).is_none(),
        concave: shape::check_concave(x, v, SHAPE_TOL).is_none(),
    }
}

/// Monotone cumulative-mass table M(x) = integral of g against the
/// reference measure from the first node up to x.
pub struct CumulativeMass {
    nodes: Arc<Vec<f64>>,
    interp: MonotoneCubic,
    cum: Vec<f64>,
    weight_is_density: bool,
}

impl CumulativeMass {
    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Mass strictly below x; clamps outside the grid.
    pub fn below(&self, map: &MapModel, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return 0.0;
        }
        if x >= self.nodes[n - 1] {
            return self.total();
        }
        let k = self.nodes.partition_point(|&t| t <= x) - 1;
        let w: Box<dyn Fn(f64) -> f64> = if self.weight_is_density {
            Box::new(|t: f64| map.h(t))
        } else {
            Box::new(|_| 1.0)
        };
        self.cum[k]
            + crate::numerics::integrate_cell(
                &|t| self.interp.eval_in_cell(k, t) * w(t),
                self.nodes[k],
                x,
            )
    }

    pub fn between(&self, map: &MapModel, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.below(map, b) - self.below(map, a)
    }

    /// Smallest x with mass-below >= m (linear inverse within a cell).
    pub fn inverse(&self, m: f64) -> f64 {
        let m = m.clamp(0.0, self.total());
        let k = match self.cum.binary_search_by(|c| c.partial_cmp(&m).unwrap()) {
            Ok(i) => return self.nodes[i],
            Err(i) => i.saturating_sub(1).min(self.nodes.len() - 2),
        };
        let span = self.cum[k + 1] - self.cum[k];
        if span <= 0.0 {
            return self.nodes[k];
        }
        let t = (m - self.cum[k]) / span;
        self.nodes[k] + t * (self.nodes[k + 1] - self.nodes[k])
    }
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Unit-interval grid: geometric clustering at the indifferent end (down
/// to 1e-12) mirrored mildly at 1 so both open ends are resolved.
pub fn unit_grid(n: usize) -> Arc<Vec<f64>> {
    unit_grid_from(n, UNIT_EDGE)
}

/// Unit-interval grid reaching down to a caller-chosen innermost node,
/// for experiments that cut deeper than the default grid.
pub fn unit_grid_from(n: usize, x_min: f64) -> Arc<Vec<f64>> {
    let m = n / 2;
    let mut nodes = Vec::with_capacity(n);
    let lo_span = (0.5 / x_min).ln();
    for i in 0..m {
        nodes.push(x_min * (lo_span * i as f64 / m as f64).exp());
    }
    // The endpoint 1 itself is a node: every inverse-branch query stays
    // inside the range there, so no constant-extrapolation kink can leak
    // into the shape of the iterates. Clustering toward 1 stops at 1e-6;
    // anything finer only feeds rounding into the divided differences.
    nodes.push(1.0);
    let hi_edge: f64 = 1e-6;
    let hi_span = (0.5 / hi_edge).ln();
    for i in 0..(n - m - 1) {
        nodes.push(1.0 - hi_edge * (hi_span * i as f64 / (n - m - 2) as f64).exp());
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup();
    Arc::new(nodes)
}

/// Half-line grid: log-spaced on (0, 1] where the chaotic region lives,
/// uniform from 1 out to the cutoff `x_max`. Mass escaping past the
/// cutoff is handled by constant extrapolation of the density.
pub fn half_line_grid(n: usize, x_max: f64) -> Arc<Vec<f64>> {
    let m = n / 4;
    let mut nodes = Vec::with_capacity(n);
    let lo_span = (1.0 / HALF_EDGE).ln();
    for i in 0..m {
        nodes.push(HALF_EDGE * (lo_span * i as f64 / m as f64).exp());
    }
    for i in 0..(n - m) {
        nodes.push(1.0 + (x_max - 1.0) * i as f64 / (n - m - 1) as f64);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup();
    Arc::new(nodes)
}

/// Default grid for a model.
pub fn default_grid(map: &MapModel, n: usize) -> Arc<Vec<f64>> {
    match map.kind {
        MapKind::UnitInterval => unit_grid(n),
        MapKind::HalfLine => half_line_grid(n, DEFAULT_X_MAX),
    }
}

// ---------------------------------------------------------------------------
// The operator
// ---------------------------------------------------------------------------

/// Precomputed per-node branch queries and weights for one (map, grid)
/// pair. Query points and weights do not change across iterations; only
/// the interpolant of the current density does.
struct Stencil {
    /// (cell index or CLAMP_LO/CLAMP_HI, query point, weight) per node per branch.
    entries: Vec<(u32, f64, f64)>,
    branches: usize,
}

const CLAMP_LO: u32 = u32::MAX;
const CLAMP_HI: u32 = u32::MAX - 1;

impl Stencil {
    fn build(map: &MapModel, nodes: &[f64]) -> Self {
        let branches = map.branch_count();
        let n = nodes.len();
        let mut entries = Vec::with_capacity(n * branches);
        let last = nodes[n - 1];
        for &x in nodes {
            let hx = measure_weight(map, x);
            for j in 0..branches {
                let y = map.inverse(j, x);
                let w = map.inverse_deriv(j, x).abs() * measure_weight(map, y) / hx;
                let cell = if y < nodes[0] {
                    CLAMP_LO
                } else if y > last {
                    CLAMP_HI
                } else {
                    (nodes.partition_point(|&t| t <= y) - 1).min(n - 2) as u32
                };
                entries.push((cell, y, w));
            }
        }
        Self { entries, branches }
    }

    /// Apply the operator to the interpolant of `values`; returns new
    /// node values and the count of clamped (out-of-range) reads.
    fn apply(&self, interp: &MonotoneCubic, n_nodes: usize, first: f64, last: f64) -> (Vec<f64>, usize) {
        let mut out = Vec::with_capacity(n_nodes);
        let mut clamped = 0usize;
        for node in 0..n_nodes {
            let mut acc = 0.0;
            for j in 0..self.branches {
                let (cell, y, w) = self.entries[node * self.branches + j];
                let g = match cell {
                    CLAMP_LO => {
                        clamped += 1;
                        interp.eval(first)
                    }
                    CLAMP_HI => {
                        clamped += 1;
                        interp.eval(last)
                    }
                    c => interp.eval_in_cell(c as usize, y),
                };
                acc += w * g;
            }
            out.push(acc.max(0.0));
        }
        (out, clamped)
    }
}

/// One application of the transfer operator.
pub fn apply_transfer(map: &MapModel, g: &GridDensity) -> Result<GridDensity, TransferError> {
    let stencil = Stencil::build(map, &g.nodes);
    let interp = g.interpolant();
    let n = g.nodes.len();
    let (values, _) = stencil.apply(&interp, n, g.nodes[0], g.nodes[n - 1]);
    GridDensity::from_values(map, g.nodes.clone(), values)
}

/// Options for `iterate_transfer`.
#[derive(Clone, Copy, Debug)]
pub struct IterateOptions {
    /// Keep every `stride`-th iterate (the final one is always kept).
    pub stride: usize,
    /// Abort when a step moves relative mass by more than this.
    pub mass_tol: f64,
    /// Record the iterate value at this point for the plateau diagnostic.
    pub plateau_probe: Option<f64>,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            mass_tol: DEFAULT_MASS_TOL,
            plateau_probe: None,
        }
    }
}

/// Outcome of an iteration run.
#[derive(Clone, Debug)]
pub struct TransferReport {
    /// Steps actually completed.
    pub n: usize,
    /// Relative mass change per step.
    pub mass_drift: Vec<f64>,
    /// Largest k such that iterates 1..=k all kept the seed's monotone
    /// direction (0 if the seed was not monotone).
    pub monotone_up_to: usize,
    /// Largest k such that iterates 1..=k all stayed concave (unit
    /// interval; 0 if the seed was not concave).
    pub concave_up_to: usize,
    /// Iterate values at the probe point, index 0 = seed.
    pub plateau_values: Vec<f64>,
    /// Interpolation reads clamped to the node range.
    pub clamped_reads: usize,
    /// True when the run aborted on mass drift.
    pub failed: bool,
}

/// Iterate the operator n times, tracking mass and shape persistence.
/// On mass-drift failure the partial results are returned with
/// `report.failed` set.
pub fn iterate_transfer(
    map: &MapModel,
    g: &GridDensity,
    n: usize,
    opts: &IterateOptions,
) -> Result<(Vec<GridDensity>, TransferReport), TransferError> {
    let stencil = Stencil::build(map, &g.nodes);
    let n_nodes = g.nodes.len();
    let (first, last) = (g.nodes[0], g.nodes[n_nodes - 1]);
    let track_increasing = g.flags.increasing;
    let track_decreasing = !track_increasing && g.flags.decreasing;
    let track_concave = g.flags.concave;

    let mut report = TransferReport {
        n: 0,
        mass_drift: Vec::with_capacity(n),
        monotone_up_to: 0,
        concave_up_to: 0,
        plateau_values: Vec::new(),
        clamped_reads: 0,
        failed: false,
    };
    let mut monotone_alive = track_increasing || track_decreasing;
    let mut concave_alive = track_concave;

    if let Some(p) = opts.plateau_probe {
        report.plateau_values.push(g.eval(p));
    }

    let mut kept: Vec<GridDensity> = Vec::with_capacity(n / opts.stride.max(1) + 2);
    let mut current = g.clone();
    kept.push(current.clone());

    for step in 1..=n {
        let interp = current.interpolant();
        let (values, clamped) = stencil.apply(&interp, n_nodes, first, last);
        report.clamped_reads += clamped;
        let next = GridDensity::from_values(map, current.nodes.clone(), values)?;

        let drift = if current.mass > 0.0 {
            (next.mass - current.mass).abs() / current.mass
        } else {
            0.0
        };
        report.mass_drift.push(drift);

        if monotone_alive {
            let ok = if track_increasing {
                next.flags.increasing
            } else {
                next.flags.decreasing
            };
            if ok {
                report.monotone_up_to = step;
            } else {
                monotone_alive = false;
            }
        }
        if concave_alive {
            if next.flags.concave {
                report.concave_up_to = step;
            } else {
                concave_alive = false;
            }
        }
        if let Some(p) = opts.plateau_probe {
            report.plateau_values.push(next.eval(p));
        }

        current = next;
        report.n = step;
        if step % opts.stride.max(1) == 0 || step == n {
            kept.push(current.clone());
        }
        if drift > opts.mass_tol {
            report.failed = true;
            break;
        }
    }
    Ok((kept, report))
}

/// Verdict of one cone step: apply P once to an increasing concave
/// density and test whether the image is still increasing and concave.
#[derive(Clone, Debug)]
pub struct ConeReport {
    pub preserved: bool,
    pub monotone_witness: Option<shape::Violation>,
    pub concave_witness: Option<shape::Violation>,
    pub image: GridDensity,
}

pub fn check_cone_preservation(
    map: &MapModel,
    g: &GridDensity,
) -> Result<ConeReport, TransferError> {
    if map.kind != MapKind::UnitInterval {
        return Err(TransferError::WrongKind {
            expected: MapKind::UnitInterval,
        });
    }
    if !g.flags.increasing || !g.flags.concave {
        return Err(TransferError::NotInCone {
            reason: format!(
                "seed flags: increasing = {}, concave = {}",
                g.flags.increasing, g.flags.concave
            ),
        });
    }
    let image = apply_transfer(map, g)?;
    let monotone_witness =
        shape::check_increasing(interior(&image.nodes), interior(&image.values), SHAPE_TOL);
    let concave_witness =
        shape::check_concave(interior(&image.nodes), interior(&image.values), SHAPE_TOL);
    Ok(ConeReport {
        preserved: monotone_witness.is_none() && concave_witness.is_none(),
        monotone_witness,
        concave_witness,
        image,
    })
}

/// Clip an increasing density at its value at `delta`: the result equals
/// g below delta and plateaus at g(delta) above it. Mass is recomputed
/// against the model measure and can only shrink.
pub fn truncate_plateau(
    map: &MapModel,
    g: &GridDensity,
    delta: f64,
) -> Result<GridDensity, TransferError> {
    let (lo, hi) = (g.nodes[0], *g.nodes.last().unwrap());
    if !(delta >= lo && delta <= hi) {
        return Err(TransferError::DeltaOutsideRange { delta, lo, hi });
    }
    if !g.flags.increasing {
        return Err(TransferError::NotMonotoneIncreasing);
    }
    let cap = g.eval(delta);
    let values: Vec<f64> = g.values.iter().map(|&v| v.min(cap)).collect();
    GridDensity::from_values(map, g.nodes.clone(), values)
}

#[cfg(test)]
#[path = "transfer_tests.rs"]
mod tests;
