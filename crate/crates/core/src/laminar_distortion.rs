//! Laminar geometry of half-line models and bounded-distortion sampling.
//!
//! The backward orbit b_0 = a_1, T(b_k) = b_{k-1} cuts the indifferent
//! branch domain into the intervals I_{-k} = (b_{k-1}, b_k) whose lengths
//! equal the displacement u(b_k). The clock w(x) = integral of 1/u from
//! a_1 measures laminar travel time; its inverse v produces the
//! comparison intervals E_n = [v(n-1), v(n)). The two partitions have
//! comparable lengths, and log-derivative ratios along excursions inside
//! the indifferent branch stay bounded no matter how long the excursion.

use crate::map_models::{MapKind, MapModel};
use crate::numerics::quad::QuadError;
use crate::numerics::{integrate_adaptive, solve_bracketed, NeumaierSum, RootError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug)]
pub enum LamError {
    NotHalfLine,
    KMaxTooSmall { given: usize, minimum: usize },
    Bracket(RootError),
    Quadrature(QuadError),
    OrbitLeftLaminarRegion { j: usize, step: usize, x: f64 },
    JOutOfRange { j: usize, k_max: usize },
}

impl fmt::Display for LamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LamError::NotHalfLine => f.write_str("laminar structure needs a half-line model"),
            LamError::KMaxTooSmall { given, minimum } => {
                write!(f, "k_max = {given}, minimum {minimum}")
            }
            LamError::Bracket(e) => write!(f, "backward-orbit bracketing: {e}"),
            LamError::Quadrature(e) => write!(f, "laminar clock quadrature: {e}"),
            LamError::OrbitLeftLaminarRegion { j, step, x } => write!(
                f,
                "orbit from I_-{j} left the indifferent branch at step {step} (x = {x})"
            ),
            LamError::JOutOfRange { j, k_max } => {
                write!(f, "excursion depth j = {j} exceeds the built k_max = {k_max}")
            }
        }
    }
}

impl std::error::Error for LamError {}

impl From<RootError> for LamError {
    fn from(e: RootError) -> Self {
        LamError::Bracket(e)
    }
}
impl From<QuadError> for LamError {
    fn from(e: QuadError) -> Self {
        LamError::Quadrature(e)
    }
}

/// Relative tolerance of the backward-orbit root finds.
const B_CHAIN_TOL: f64 = 1e-13;

pub struct LaminarStructure<'m> {
    map: &'m MapModel,
    /// b[k]: backward orbit of the branch cut, strictly increasing.
    pub b: Vec<f64>,
    /// Laminar clock at each b[k]: w_knots[k] = w(b[k]), w(a_1) = 0.
    pub w_knots: Vec<f64>,
    /// Comparison-interval boundaries v(0) = a_1, v(1), ..., v(n_max).
    pub e_bounds: Vec<f64>,
    /// n_k for k >= 1: the index with b_k inside E_{n_k}.
    pub n_k: Vec<usize>,
    pub k_max: usize,
}

impl<'m> LaminarStructure<'m> {
    pub fn u(&self, x: f64) -> f64 {
        self.map.u(x)
    }

    /// Laminar clock w(x) for x in [a_1, b_kmax].
    pub fn w(&self, x: f64) -> Result<f64, LamError> {
        let k = self
            .b
            .partition_point(|&t| t <= x)
            .saturating_sub(1)
            .min(self.b.len() - 2);
        let partial = integrate_adaptive(&|t| 1.0 / self.u(t), self.b[k], x, 1e-12, 1e-14)?;
        Ok(self.w_knots[k] + partial)
    }

    /// Inverse clock v(t): the point reached after laminar time t.
    pub fn v(&self, t: f64) -> Result<f64, LamError> {
        let k = self
            .w_knots
            .partition_point(|&w| w <= t)
            .saturating_sub(1)
            .min(self.w_knots.len() - 2);
        let (lo, hi) = (self.b[k], self.b[k + 1]);
        let target = t - self.w_knots[k];
        let f = |x: f64| {
            integrate_adaptive(&|s| 1.0 / self.u(s), lo, x, 1e-12, 1e-14).unwrap_or(f64::NAN)
                - target
        };
        let df = |x: f64| 1.0 / self.u(x);
        Ok(solve_bracketed(&f, Some(&df), lo, hi, B_CHAIN_TOL * hi)?)
    }
}

/// Build the backward orbit, the laminar clock, and the comparison
/// partition up to depth k_max.
pub fn build_laminar(map: &MapModel, k_max: usize) -> Result<LaminarStructure<'_>, LamError> {
    if map.kind != MapKind::HalfLine {
        return Err(LamError::NotHalfLine);
    }
    if k_max < 1 {
        return Err(LamError::KMaxTooSmall { given: k_max, minimum: 1 });
    }
    let a1 = map.a1();
    let branch0 = map.branch(0);

    // backward orbit by bracketed Newton: the next point lies within one
    // displacement of the previous one because u is decreasing
    let mut b = Vec::with_capacity(k_max + 1);
    b.push(a1);
    for k in 1..=k_max {
        let prev = b[k - 1];
        let step = map.u(prev).max(f64::MIN_POSITIVE);
        let hi = prev + 1.0000001 * step;
        let f = |x: f64| branch0.forward(x) - prev;
        let df = |x: f64| branch0.forward_deriv(x);
        let root = solve_bracketed(&f, Some(&df), prev, hi, B_CHAIN_TOL * hi)?;
        b.push(root);
    }

    // cumulative clock along the chain
    let mut w_knots = Vec::with_capacity(k_max + 1);
    let mut acc = NeumaierSum::new();
    w_knots.push(0.0);
    for k in 1..=k_max {
        acc.add(integrate_adaptive(
            &|t| 1.0 / map.u(t),
            b[k - 1],
            b[k],
            1e-12,
            1e-14,
        )?);
        w_knots.push(acc.value());
    }

    let mut ls = LaminarStructure {
        map,
        b,
        w_knots,
        e_bounds: Vec::new(),
        n_k: Vec::new(),
        k_max,
    };

    // comparison boundaries v(0) .. v(N), N = floor(w(b_kmax))
    let n_max = ls.w_knots[k_max].floor() as usize;
    let mut e_bounds = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        e_bounds.push(ls.v(n as f64)?);
    }
    ls.e_bounds = e_bounds;

    // n_k = floor(w(b_k)) + 1
    ls.n_k = (1..=k_max)
        .map(|k| ls.w_knots[k].floor() as usize + 1)
        .collect();
    Ok(ls)
}

#[derive(Clone, Debug)]
pub struct ComparabilityRow {
    pub k: usize,
    pub b_k: f64,
    pub lambda_i: f64,
    pub lambda_e: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ComparabilityReport {
    pub rows: Vec<ComparabilityRow>,
    /// Sampled sup of max(|I|/|E|, |E|/|I|).
    pub c1_hat: f64,
    /// True when the second half of the depth range did not push the sup
    /// more than 10% above the first half: no growth trend.
    pub stabilized: bool,
    /// Sampled bound on #{k : n_k = n}.
    pub max_multiplicity: usize,
}

/// Compare the backward-orbit intervals against the clock intervals.
pub fn check_partition_comparability(ls: &LaminarStructure<'_>) -> ComparabilityReport {
    let mut rows = Vec::with_capacity(ls.k_max);
    for k in 1..=ls.k_max {
        let lambda_i = ls.b[k] - ls.b[k - 1];
        let n = ls.n_k[k - 1];
        if n >= ls.e_bounds.len() {
            break; // b_k beyond the tabulated comparison range
        }
        let lambda_e = ls.e_bounds[n] - ls.e_bounds[n - 1];
        let ratio = (lambda_i / lambda_e).max(lambda_e / lambda_i);
        rows.push(ComparabilityRow {
            k,
            b_k: ls.b[k],
            lambda_i,
            lambda_e,
            ratio,
        });
    }
    let c1_hat = rows.iter().map(|r| r.ratio).fold(1.0, f64::max);
    let half = rows.len() / 2;
    let first_half = rows[..half].iter().map(|r| r.ratio).fold(1.0, f64::max);
    let second_half = rows[half..].iter().map(|r| r.ratio).fold(1.0, f64::max);
    let stabilized = second_half <= 1.1 * first_half;
    let mut counts = std::collections::HashMap::new();
    for &n in &ls.n_k {
        *counts.entry(n).or_insert(0usize) += 1;
    }
    let max_multiplicity = counts.values().copied().max().unwrap_or(0);
    ComparabilityReport {
        rows,
        c1_hat,
        stabilized,
        max_multiplicity,
    }
}

#[derive(Clone, Debug)]
pub struct DistortionRow {
    pub j: usize,
    pub p: usize,
    pub sup_log_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct DistortionReport {
    pub rows: Vec<DistortionRow>,
    /// Sampled sup of |log (T^p)'(x) / (T^p)'(y)| over all tuples.
    pub global_sup: f64,
    /// Smallest constant making |log ratio| <= C |T^p x - T^p y| / L_{p-j}
    /// hold at every sampled tuple.
    pub cprime_hat: f64,
    pub pairs_per_j: usize,
}

/// Sample log-derivative ratios along excursions inside the indifferent
/// branch. For x, y in I_{-j} and 0 <= p <= j the chain products
/// (T^p)'(x) are accumulated in log space with compensated summation —
/// up to a hundred factors each within ulps of 1.
pub fn estimate_distortion(
    map: &MapModel,
    ls: &LaminarStructure<'_>,
    j_list: &[usize],
    pairs_per_j: usize,
    seed: u64,
) -> Result<DistortionReport, LamError> {
    let a1 = map.a1();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<DistortionRow> = Vec::new();
    let mut global_sup = 0.0f64;
    let mut cprime = 0.0f64;

    for &j in j_list {
        if j < 1 || j > ls.k_max {
            return Err(LamError::JOutOfRange { j, k_max: ls.k_max });
        }
        let (lo, hi) = (ls.b[j - 1], ls.b[j]);
        let mut sup_per_p = vec![0.0f64; j + 1];
        for _ in 0..pairs_per_j {
            let x0 = lo + (hi - lo) * rng.random::<f64>();
            let y0 = lo + (hi - lo) * rng.random::<f64>();
            let tx = excursion_log_profile(map, x0, j)?;
            let ty = excursion_log_profile(map, y0, j)?;
            for p in 0..=j {
                let log_ratio = (tx.log_deriv[p] - ty.log_deriv[p]).abs();
                sup_per_p[p] = sup_per_p[p].max(log_ratio);
                global_sup = global_sup.max(log_ratio);
                // normalizing length: the interval the p-th images share
                let len = if p == j {
                    a1
                } else {
                    ls.b[j - p] - ls.b[j - p - 1]
                };
                let gap = (tx.points[p] - ty.points[p]).abs();
                if gap > 1e-13 * tx.points[p].abs().max(1.0) {
                    cprime = cprime.max(log_ratio * len / gap);
                }
            }
        }
        for (p, &s) in sup_per_p.iter().enumerate() {
            rows.push(DistortionRow {
                j,
                p,
                sup_log_ratio: s,
            });
        }
    }
    Ok(DistortionReport {
        rows,
        global_sup,
        cprime_hat: cprime,
        pairs_per_j,
    })
}

struct ExcursionProfile {
    /// Orbit points T^p(x), p = 0..=j.
    points: Vec<f64>,
    /// Accumulated log-derivatives: log (T^p)'(x), p = 0..=j.
    log_deriv: Vec<f64>,
}

fn excursion_log_profile(map: &MapModel, x0: f64, j: usize) -> Result<ExcursionProfile, LamError> {
    let a1 = map.a1();
    let b0 = map.branch(0);
    let mut points = Vec::with_capacity(j + 1);
    let mut log_deriv = Vec::with_capacity(j + 1);
    let mut acc = NeumaierSum::new();
    let mut x = x0;
    points.push(x);
    log_deriv.push(0.0);
    for step in 0..j {
        if x <= a1 {
            return Err(LamError::OrbitLeftLaminarRegion { j, step, x });
        }
        acc.add(b0.forward_deriv(x).ln());
        x = b0.forward(x);
        points.push(x);
        log_deriv.push(acc.value());
    }
    Ok(ExcursionProfile { points, log_deriv })
}

#[cfg(test)]
#[path = "laminar_distortion_tests.rs"]
mod tests;
