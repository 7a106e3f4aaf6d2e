//! Markov maps with an indifferent fixed point, on the open unit interval
//! (fixed point at 0, infinite absolutely continuous invariant measure with
//! density `h`) or on the half-line (fixed point at +infinity, Lebesgue
//! invariant).
//!
//! A map is a list of full branches. Inverse branches and their first two
//! derivatives are the primitive data — they are exact closed forms for
//! every built-in family — while forward evaluation may be closed-form or
//! a monotone root-find against the inverse branch. Models are immutable
//! after construction and safe to share across threads.

mod families;

pub use families::{build_builtin, farey, pm_halfline, pm_quadratic, t_alpha};

use crate::numerics::{integrate_geometric, quad::SingularEnd, shape, NeumaierSum};
use std::fmt;
use std::sync::Arc;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    UnitInterval,
    HalfLine,
}

/// Orbit acceleration available near the indifferent fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaminarKind {
    /// No special structure; orbits are iterated directly.
    None,
    /// Farey map: the laminar phase is an exact integer recursion in 1/x.
    FareyUnit,
    /// x + x^2 mod 1: compensated stepping of the reciprocal coordinate.
    PmQuadratic,
    /// Half-line conjugate of the quadratic map: compensated stepping of e^s.
    PmHalfLine,
}

/// One full branch: forward map, its derivatives, and the exact inverse
/// branch with derivatives. Inverse derivatives are signed.
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    forward: RealFn,
    forward_d: RealFn,
    forward_dd: RealFn,
    inverse: RealFn,
    inverse_d: RealFn,
    inverse_dd: RealFn,
}

impl Branch {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lo: f64,
        hi: f64,
        forward: RealFn,
        forward_d: RealFn,
        forward_dd: RealFn,
        inverse: RealFn,
        inverse_d: RealFn,
        inverse_dd: RealFn,
    ) -> Self {
        Self {
            lo,
            hi,
            forward,
            forward_d,
            forward_dd,
            inverse,
            inverse_d,
            inverse_dd,
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        (self.forward)(x)
    }
    pub fn forward_deriv(&self, x: f64) -> f64 {
        (self.forward_d)(x)
    }
    pub fn forward_second(&self, x: f64) -> f64 {
        (self.forward_dd)(x)
    }
    pub fn inverse(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }
    pub fn inverse_deriv(&self, y: f64) -> f64 {
        (self.inverse_d)(y)
    }
    pub fn inverse_second(&self, y: f64) -> f64 {
        (self.inverse_dd)(y)
    }

    pub fn forward_arc(&self) -> RealFn {
        self.forward.clone()
    }
    pub fn forward_deriv_arc(&self) -> RealFn {
        self.forward_d.clone()
    }
    pub fn forward_second_arc(&self) -> RealFn {
        self.forward_dd.clone()
    }
    pub fn inverse_arc(&self) -> RealFn {
        self.inverse.clone()
    }
    pub fn inverse_deriv_arc(&self) -> RealFn {
        self.inverse_d.clone()
    }
    pub fn inverse_second_arc(&self) -> RealFn {
        self.inverse_dd.clone()
    }
}

/// Density of the infinite invariant measure of a unit-interval model,
/// together with whatever closed forms the family affords.
pub struct InvariantDensity {
    h: RealFn,
    h_deriv: RealFn,
    /// A(x) = integral of h over [x, 1]; strictly decreasing, A(1) = 0.
    antiderivative: Option<RealFn>,
    antiderivative_inverse: Option<RealFn>,
    /// Endpoint where h is non-integrable.
    pub singular_end: f64,
}

impl InvariantDensity {
    pub fn new(h: RealFn, h_deriv: RealFn) -> Self {
        Self {
            h,
            h_deriv,
            antiderivative: None,
            antiderivative_inverse: None,
            singular_end: 0.0,
        }
    }

    pub fn with_antiderivative(mut self, a: RealFn, a_inv: RealFn) -> Self {
        self.antiderivative = Some(a);
        self.antiderivative_inverse = Some(a_inv);
        self
    }

    pub fn h(&self, x: f64) -> f64 {
        (self.h)(x)
    }
    pub fn h_deriv(&self, x: f64) -> f64 {
        (self.h_deriv)(x)
    }
    pub fn antiderivative(&self, x: f64) -> Option<f64> {
        self.antiderivative.as_ref().map(|a| a(x))
    }
    pub fn antiderivative_inverse(&self, s: f64) -> Option<f64> {
        self.antiderivative_inverse.as_ref().map(|a| a(s))
    }
    pub fn has_closed_form(&self) -> bool {
        self.antiderivative.is_some() && self.antiderivative_inverse.is_some()
    }

    pub fn clone_evaluators(&self) -> (RealFn, RealFn) {
        (self.h.clone(), self.h_deriv.clone())
    }

    pub fn clone_antiderivatives(&self) -> Option<(RealFn, RealFn)> {
        match (&self.antiderivative, &self.antiderivative_inverse) {
            (Some(a), Some(b)) => Some((a.clone(), b.clone())),
            _ => None,
        }
    }
}

pub struct MapModel {
    pub kind: MapKind,
    pub family: String,
    pub laminar: LaminarKind,
    branches: Vec<Branch>,
    /// Interior partition points a_1, ..., a_{N-1}: increasing toward 1 on
    /// the unit interval, decreasing toward 0 on the half-line.
    pub cuts: Vec<f64>,
    pub density: Option<InvariantDensity>,
    /// Half-line models: cancellation-free evaluator of the laminar
    /// displacement u(x) = x - T(x) on the indifferent branch. The naive
    /// difference loses all digits once u drops below eps * x.
    pub displacement: Option<RealFn>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapError {
    UnknownFamily(String),
    AlphaOutOfRange(f64),
    MissingDensity { family: String },
    ResolutionTooSmall { given: usize, minimum: usize },
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::UnknownFamily(name) => write!(
                f,
                "unknown family '{name}' (expected farey, t_alpha, pm_quadratic, pm_halfline)"
            ),
            MapError::AlphaOutOfRange(a) => {
                write!(f, "alpha = {a} outside the valid range (0, 1)")
            }
            MapError::MissingDensity { family } => {
                write!(f, "map '{family}' carries no invariant density")
            }
            MapError::ResolutionTooSmall { given, minimum } => {
                write!(f, "resolution {given} below minimum {minimum}")
            }
        }
    }
}

impl std::error::Error for MapError {}

impl MapModel {
    /// Assemble a model from explicit branch data. This is the extension
    /// point for maps beyond the built-in families.
    pub fn new(
        kind: MapKind,
        family: impl Into<String>,
        laminar: LaminarKind,
        branches: Vec<Branch>,
        cuts: Vec<f64>,
        density: Option<InvariantDensity>,
        displacement: Option<RealFn>,
    ) -> Self {
        Self {
            kind,
            family: family.into(),
            laminar,
            branches,
            cuts,
            density,
            displacement,
        }
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn branch(&self, j: usize) -> &Branch {
        &self.branches[j]
    }

    /// Branch owning `x`. Partition points resolve to the branch on their
    /// left (smaller x), matching the half-open branch domains.
    pub fn branch_index_of(&self, x: f64) -> usize {
        match self.kind {
            MapKind::UnitInterval => self.cuts.partition_point(|&a| a < x),
            MapKind::HalfLine => self.cuts.iter().take_while(|&&a| a >= x).count(),
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        self.branch(self.branch_index_of(x)).forward(x)
    }

    pub fn forward_deriv(&self, x: f64) -> f64 {
        self.branch(self.branch_index_of(x)).forward_deriv(x)
    }

    pub fn inverse(&self, j: usize, y: f64) -> f64 {
        self.branch(j).inverse(y)
    }

    pub fn inverse_deriv(&self, j: usize, y: f64) -> f64 {
        self.branch(j).inverse_deriv(y)
    }

    /// First partition point a_1: boundary of the indifferent branch.
    pub fn a1(&self) -> f64 {
        self.cuts[0]
    }

    /// Invariant density at x (identically 1 for Lebesgue models).
    pub fn h(&self, x: f64) -> f64 {
        match &self.density {
            Some(d) => d.h(x),
            None => 1.0,
        }
    }

    pub fn density(&self) -> Result<&InvariantDensity, MapError> {
        self.density.as_ref().ok_or(MapError::MissingDensity {
            family: self.family.clone(),
        })
    }

    /// Laminar displacement u(x) = x - T(x) on the indifferent branch of a
    /// half-line model.
    pub fn u(&self, x: f64) -> f64 {
        match &self.displacement {
            Some(u) => u(x),
            None => x - self.branch(0).forward(x),
        }
    }

    /// Invariant measure of [a, b], 0 < a <= b.
    pub fn measure_interval(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self.kind {
            MapKind::HalfLine => b - a,
            MapKind::UnitInterval => {
                let d = self.density.as_ref().expect("unit-interval model has a density");
                if let (Some(aa), Some(ab)) = (d.antiderivative(a), d.antiderivative(b)) {
                    aa - ab
                } else {
                    integrate_geometric(&|x| d.h(x), a, b, SingularEnd::Lower, 1e-12, 1e-14)
                        .expect("density quadrature")
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Assumption reports
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotChecked,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckStatus::Pass => f.write_str("pass"),
            CheckStatus::Fail => f.write_str("fail"),
            CheckStatus::NotChecked => f.write_str("not_checked"),
        }
    }
}

/// Sample point witnessing a failed inequality.
#[derive(Clone, Debug)]
pub struct Witness {
    pub x: f64,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub status: CheckStatus,
    pub witness: Option<Witness>,
    pub note: String,
}

impl AssumptionCheck {
    fn pass(id: &'static str, note: impl Into<String>) -> Self {
        Self {
            id,
            status: CheckStatus::Pass,
            witness: None,
            note: note.into(),
        }
    }

    fn fail(id: &'static str, x: f64, detail: impl Into<String>) -> Self {
        Self {
            id,
            status: CheckStatus::Fail,
            witness: Some(Witness {
                x,
                detail: detail.into(),
            }),
            note: String::new(),
        }
    }

    fn not_checked(id: &'static str, note: impl Into<String>) -> Self {
        Self {
            id,
            status: CheckStatus::NotChecked,
            witness: None,
            note: note.into(),
        }
    }
}

/// Sampled verdicts for the standing hypotheses of a model. These witness
/// inequalities on a finite grid; they certify nothing.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub resolution: usize,
}

impl AssumptionReport {
    pub fn status(&self, id: &str) -> Option<CheckStatus> {
        self.checks.iter().find(|c| c.id == id).map(|c| c.status)
    }

    pub fn all_pass(&self) -> bool {
        self.checks
            .iter()
            .all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
    }
}

/// Tolerance on divided-difference shape tests.
const SHAPE_TOL: f64 = 1e-9;
/// Uniform-expansion checks require |T'| to clear 1 by this margin.
const EXPANSION_MARGIN: f64 = 1e-3;
/// Distortion ratios above this are treated as unbounded.
const DISTORTION_CAP: f64 = 1e6;
/// Closest sampled approach to an open endpoint for pointwise checks.
const EDGE_OFFSET: f64 = 1e-9;
/// Closest approach for divided-difference checks. Differencing O(1)
/// values over gaps of relative size 1e-9 would amplify f64 rounding far
/// past SHAPE_TOL, so those checks sample a tamer grid.
const DD_EDGE_OFFSET: f64 = 1e-4;
/// Half-line check grids stop here; the maps flatten toward infinity.
const HALF_LINE_SPAN: f64 = 50.0;

/// Two-sided geometric grid on the open interval (lo, hi), clustered at
/// both endpoints with relative offset down to `edge`.
fn two_sided_grid(lo: f64, hi: f64, n: usize, edge: f64) -> Vec<f64> {
    let len = hi - lo;
    let m = (n / 2).max(8);
    let mut pts = Vec::with_capacity(2 * m);
    let ratio = (0.5 / edge).ln() / (m - 1) as f64;
    for i in 0..m {
        let off = edge * ((i as f64) * ratio).exp();
        pts.push(lo + len * off);
        pts.push(hi - len * off);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

/// Grid over a branch domain; unbounded branches are capped and clustered
/// at the finite end only.
fn branch_grid(branch: &Branch, n: usize, edge: f64) -> Vec<f64> {
    if branch.hi.is_finite() {
        two_sided_grid(branch.lo, branch.hi, n, edge)
    } else {
        let hi = branch.lo + HALF_LINE_SPAN;
        let m = n.max(16);
        let half = m / 2;
        let mut pts: Vec<f64> = (0..half)
            .map(|i| {
                let t = edge * ((0.5 / edge).ln() * i as f64 / (half - 1) as f64).exp();
                branch.lo + (hi - branch.lo) * t
            })
            .collect();
        for i in 0..half {
            pts.push(branch.lo + (hi - branch.lo) * (0.5 + 0.5 * i as f64 / (half - 1) as f64));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }
}

fn codomain_grid(kind: MapKind, n: usize) -> Vec<f64> {
    match kind {
        MapKind::UnitInterval => two_sided_grid(0.0, 1.0, n, EDGE_OFFSET),
        MapKind::HalfLine => {
            let m = (n / 2).max(8);
            let mut pts: Vec<f64> = (0..m)
                .map(|i| {
                    EDGE_OFFSET * ((1.0 / EDGE_OFFSET).ln() * i as f64 / (m - 1) as f64).exp()
                })
                .collect();
            for i in 1..=m {
                pts.push(1.0 + (HALF_LINE_SPAN - 1.0) * i as f64 / m as f64);
            }
            pts
        }
    }
}

/// Sup over a sampled grid of the relative transfer-identity residual:
/// |sum_j |psi_j'(x)| h(psi_j(x)) - h(x)| / h(x) on the unit interval,
/// |sum_j |psi_j'(x)| - 1| on the half-line.
pub fn verify_invariant_density(map: &MapModel, resolution: usize) -> Result<f64, MapError> {
    if resolution < 64 {
        return Err(MapError::ResolutionTooSmall {
            given: resolution,
            minimum: 64,
        });
    }
    if map.kind == MapKind::UnitInterval {
        map.density()?;
    }
    let grid = codomain_grid(map.kind, resolution);
    let mut worst = 0.0f64;
    for &x in &grid {
        let mut s = NeumaierSum::new();
        for j in 0..map.branch_count() {
            let b = map.branch(j);
            s.add(b.inverse_deriv(x).abs() * map.h(b.inverse(x)));
        }
        let res = match map.kind {
            MapKind::UnitInterval => {
                let hx = map.h(x);
                (s.value() - hx).abs() / hx
            }
            MapKind::HalfLine => (s.value() - 1.0).abs(),
        };
        worst = worst.max(res);
    }
    Ok(worst)
}

/// Sample the standing hypotheses of the model class on a geometric grid
/// and report pass/fail with witnesses. Smoothness hypotheses are
/// reported as not checked.
pub fn check_assumptions(map: &MapModel, resolution: usize) -> Result<AssumptionReport, MapError> {
    if resolution < 64 {
        return Err(MapError::ResolutionTooSmall {
            given: resolution,
            minimum: 64,
        });
    }
    let checks = match map.kind {
        MapKind::UnitInterval => {
            map.density()?;
            unit_interval_checks(map, resolution)
        }
        MapKind::HalfLine => half_line_checks(map, resolution),
    };
    Ok(AssumptionReport {
        checks,
        resolution,
    })
}

fn expansion_check(map: &MapModel, id: &'static str, resolution: usize) -> AssumptionCheck {
    let mut inf = f64::INFINITY;
    let mut arg = f64::NAN;
    for j in 1..map.branch_count() {
        for x in branch_grid(map.branch(j), resolution, EDGE_OFFSET) {
            let d = map.branch(j).forward_deriv(x).abs();
            if d < inf {
                inf = d;
                arg = x;
            }
        }
    }
    if inf >= 1.0 + EXPANSION_MARGIN {
        AssumptionCheck::pass(id, format!("sampled inf |T'| = {inf:.6} over branches j >= 1"))
    } else {
        AssumptionCheck::fail(
            id,
            arg,
            format!("|T'({arg:.9})| = {inf:.12} does not exceed 1 + {EXPANSION_MARGIN}"),
        )
    }
}

fn distortion_check(map: &MapModel, id: &'static str, resolution: usize) -> AssumptionCheck {
    let mut sup = 0.0f64;
    let mut arg = f64::NAN;
    for j in 0..map.branch_count() {
        for x in branch_grid(map.branch(j), resolution, EDGE_OFFSET) {
            let d = map.branch(j).forward_deriv(x);
            let dd = map.branch(j).forward_second(x);
            let ratio = dd.abs() / (d * d);
            if !ratio.is_finite() || ratio > sup {
                sup = ratio;
                arg = x;
            }
        }
    }
    if sup.is_finite() && sup <= DISTORTION_CAP {
        AssumptionCheck::pass(id, format!("sampled sup |T''|/T'^2 = {sup:.6}"))
    } else {
        AssumptionCheck::fail(id, arg, format!("|T''|/T'^2 = {sup:e} at x = {arg:.9}"))
    }
}

fn unit_interval_checks(map: &MapModel, resolution: usize) -> Vec<AssumptionCheck> {
    let d = map.density.as_ref().unwrap();
    let grid = codomain_grid(MapKind::UnitInterval, resolution);
    let a1 = map.a1();
    let b0 = map.branch(0);
    let mut checks = Vec::with_capacity(8);

    checks.push(AssumptionCheck::not_checked(
        "A1",
        "C2 extension to closed branch domains is assumed, not sampled",
    ));
    checks.push(expansion_check(map, "A2", resolution));
    checks.push(distortion_check(map, "A3", resolution));

    // Indifferent branch read through its inverse: psi_0 maps into (0, a1],
    // 0 < psi_0' <= 1 with slope 1 in the limit at 0, and psi_0 concave.
    let a4 = (|| {
        let x0 = grid[0];
        for &x in &grid {
            let v = b0.inverse(x);
            if !(v > 0.0 && v <= a1 * (1.0 + 1e-12)) {
                return AssumptionCheck::fail("A4", x, format!("psi_0({x:e}) = {v:e} outside (0, a1]"));
            }
            let dv = b0.inverse_deriv(x);
            if !(dv > 0.0 && dv <= 1.0 + 1e-12) {
                return AssumptionCheck::fail("A4", x, format!("psi_0'({x:e}) = {dv:e} outside (0, 1]"));
            }
            if b0.inverse_second(x) > SHAPE_TOL {
                return AssumptionCheck::fail(
                    "A4",
                    x,
                    format!("psi_0''({x:e}) = {:e} > 0 (branch 0 not convex)", b0.inverse_second(x)),
                );
            }
        }
        if (b0.inverse_deriv(x0) - 1.0).abs() > 1e-3 {
            return AssumptionCheck::fail(
                "A4",
                x0,
                format!("psi_0'({x0:e}) = {} far from 1: no indifferent fixed point", b0.inverse_deriv(x0)),
            );
        }
        if b0.inverse(x0) > x0 * (1.0 + 1e-6) {
            return AssumptionCheck::fail("A4", x0, "psi_0 does not fix 0 in the limit".to_string());
        }
        AssumptionCheck::pass("A4", "psi_0 into (0,a1], 0 < psi_0' <= 1, slope -> 1 at 0, concave")
    })();
    checks.push(a4);

    // Last branch decreasing.
    let b_last = map.branch(map.branch_count() - 1);
    let a5 = grid
        .iter()
        .find(|&&x| b_last.inverse_deriv(x) > 1e-12)
        .map(|&x| {
            AssumptionCheck::fail(
                "A5",
                x,
                format!("psi_1'({x:e}) = {:e} > 0 (branch not decreasing)", b_last.inverse_deriv(x)),
            )
        })
        .unwrap_or_else(|| AssumptionCheck::pass("A5", "psi_1 decreasing on sampled grid"));
    checks.push(a5);

    // Sum of inverse branches increasing and concave.
    let a6 = (|| {
        for &x in &grid {
            let ds: f64 = (0..map.branch_count()).map(|j| map.branch(j).inverse_deriv(x)).sum();
            if ds < -SHAPE_TOL {
                return AssumptionCheck::fail("A6", x, format!("(sum psi_j)'({x:e}) = {ds:e} < 0"));
            }
            let dds: f64 = (0..map.branch_count()).map(|j| map.branch(j).inverse_second(x)).sum();
            if dds > SHAPE_TOL {
                return AssumptionCheck::fail("A6", x, format!("(sum psi_j)''({x:e}) = {dds:e} > 0"));
            }
        }
        AssumptionCheck::pass("A6", "sum of inverse branches increasing and concave")
    })();
    checks.push(a6);

    // Weight of the indifferent branch in the transfer operator:
    // w = psi_0' (h o psi_0) / h, strictly decreasing and convex. The
    // first derivative is assembled in closed form; convexity is read off
    // first divided differences of that derivative on the tamer grid.
    let weight = |x: f64| b0.inverse_deriv(x) * d.h(b0.inverse(x)) / d.h(x);
    let weight_d = |x: f64| {
        let p = b0.inverse(x);
        let (dp, ddp) = (b0.inverse_deriv(x), b0.inverse_second(x));
        let (hx, hp) = (d.h(x), d.h(p));
        ddp * hp / hx + dp * dp * d.h_deriv(p) / hx - dp * hp * d.h_deriv(x) / (hx * hx)
    };
    let dd_grid = two_sided_grid(0.0, 1.0, resolution, DD_EDGE_OFFSET);
    let a7 = (|| {
        for &x in &grid {
            let s = weight_d(x);
            if s > SHAPE_TOL {
                return AssumptionCheck::fail("A7", x, format!("weight slope {s:e} at {x:e} is positive"));
            }
        }
        let slopes: Vec<f64> = dd_grid.iter().map(|&x| weight_d(x)).collect();
        if let Some(v) = shape::check_increasing(&dd_grid, &slopes, SHAPE_TOL) {
            return AssumptionCheck::fail(
                "A7",
                v.x,
                format!("weight curvature {:e} at {:e} breaks convexity", v.magnitude, v.x),
            );
        }
        if weight(grid[0]) - weight(grid[grid.len() - 1]) <= SHAPE_TOL {
            return AssumptionCheck::fail("A7", grid[0], "weight not strictly decreasing across the grid".to_string());
        }
        AssumptionCheck::pass("A7", "transfer weight of branch 0 strictly decreasing and convex")
    })();
    checks.push(a7);

    // Signed sum psi_0'(h o psi_0) + psi_1'(h o psi_1) >= 0, relative to h.
    let a8 = grid
        .iter()
        .find_map(|&x| {
            let s: f64 = (0..map.branch_count())
                .map(|j| {
                    let b = map.branch(j);
                    b.inverse_deriv(x) * d.h(b.inverse(x))
                })
                .sum();
            (s < -SHAPE_TOL * d.h(x)).then(|| {
                AssumptionCheck::fail("A8", x, format!("signed weight sum = {s:e} < 0 at x = {x:e}"))
            })
        })
        .unwrap_or_else(|| AssumptionCheck::pass("A8", "signed inverse-derivative weight sum nonnegative"));
    checks.push(a8);

    checks
}

fn half_line_checks(map: &MapModel, resolution: usize) -> Vec<AssumptionCheck> {
    let mut checks = Vec::with_capacity(6);
    let b0 = map.branch(0);
    let grid0 = branch_grid(b0, resolution, EDGE_OFFSET);

    checks.push(AssumptionCheck::not_checked(
        "B1",
        "C2 extension and surjectivity onto the half-line are assumed, not sampled",
    ));
    checks.push(expansion_check(map, "B2", resolution));
    checks.push(distortion_check(map, "B3", resolution));

    // u(x) = x - T(x) on the indifferent branch: positive, decreasing,
    // convex, with u'' decreasing. Without a dedicated displacement
    // evaluator the difference x - T(x) is resolvable only while u stays
    // above the rounding floor eps*x; smaller values are not judged.
    let b4 = (|| {
        let exact_u = map.displacement.is_some();
        for &x in &grid0 {
            let u = map.u(x);
            let resolvable = exact_u || u.abs() > 32.0 * f64::EPSILON * x.abs();
            if u <= 0.0 && resolvable {
                return AssumptionCheck::fail("B4", x, format!("u({x:.6}) = {u:e} <= 0"));
            }
            let ud = 1.0 - b0.forward_deriv(x);
            if ud > SHAPE_TOL {
                return AssumptionCheck::fail("B4", x, format!("u'({x:.6}) = {ud:e} > 0 (not decreasing)"));
            }
            let udd = -b0.forward_second(x);
            if udd < -SHAPE_TOL {
                return AssumptionCheck::fail("B4", x, format!("u''({x:.6}) = {udd:e} < 0 (not convex)"));
            }
        }
        let dd_grid = branch_grid(b0, resolution, DD_EDGE_OFFSET);
        let udd: Vec<f64> = dd_grid.iter().map(|&x| -b0.forward_second(x)).collect();
        if let Some(v) = shape::check_decreasing(&dd_grid, &udd, SHAPE_TOL) {
            return AssumptionCheck::fail(
                "B4",
                v.x,
                format!("u'' increases at {:.6} (slope {:e})", v.x, v.magnitude),
            );
        }
        AssumptionCheck::pass("B4", "u positive, decreasing, convex; u'' decreasing")
    })();
    checks.push(b4);

    // Lebesgue preservation, sampled through the inverse branches.
    let b5 = match verify_invariant_density(map, resolution) {
        Ok(res) if res <= 1e-8 => {
            AssumptionCheck::pass("B5", format!("sup |sum psi_j' - 1| = {res:e}"))
        }
        Ok(res) => AssumptionCheck::fail("B5", f64::NAN, format!("sup |sum psi_j' - 1| = {res:e} > 1e-8")),
        Err(e) => AssumptionCheck::fail("B5", f64::NAN, e.to_string()),
    };
    checks.push(b5);

    // Branches beyond the indifferent one increasing and convex.
    let b6 = (|| {
        for j in 1..map.branch_count() {
            let b = map.branch(j);
            for x in branch_grid(b, resolution, EDGE_OFFSET) {
                if b.forward_deriv(x) <= 0.0 {
                    return AssumptionCheck::fail(
                        "B6",
                        x,
                        format!("branch {j} has T'({x:e}) = {:e} <= 0", b.forward_deriv(x)),
                    );
                }
                if b.forward_second(x) < -SHAPE_TOL {
                    return AssumptionCheck::fail(
                        "B6",
                        x,
                        format!("branch {j} has T''({x:e}) = {:e} < 0", b.forward_second(x)),
                    );
                }
            }
        }
        AssumptionCheck::pass("B6", "branches j >= 1 increasing and convex")
    })();
    checks.push(b6);

    checks
}
