//! Hitting-time statistics and distributional limits.
//!
//! The hitting time H(x) counts iterates until the orbit first enters
//! the chaotic region J. Near the indifferent fixed point double
//! precision cannot step orbits directly: the displacement per step
//! falls below one ulp long before the orbit escapes. Each built-in
//! family therefore carries a laminar acceleration in its natural
//! coordinate — exact integer descent of 1/x for the Farey map,
//! compensated reciprocal stepping for the quadratic family, compensated
//! exponential stepping on the half-line.

use crate::map_models::{LaminarKind, MapError, MapKind, MapModel};
use crate::numerics::NeumaierSum;
use crate::observables::{GlobalObservable, ObsError, ObsKind};
use crate::transfer::{GridDensity, TransferError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub enum LimitError {
    BudgetExhausted { x: f64, budget: u64 },
    OrbitAtBoundary { x: f64 },
    KMaxTooSmall { given: usize },
    SampleCountTooSmall { given: usize, minimum: usize },
    QTooSmall,
    Map(MapError),
    Transfer(TransferError),
    Obs(ObsError),
}

impl fmt::Display for LimitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitError::BudgetExhausted { x, budget } => {
                write!(f, "laminar phase from x = {x:e} exceeds the budget of {budget} steps")
            }
            LimitError::OrbitAtBoundary { x } => {
                write!(f, "orbit reached a partition endpoint at x = {x:e}")
            }
            LimitError::KMaxTooSmall { given } => write!(f, "k_max = {given} must be >= 1"),
            LimitError::SampleCountTooSmall { given, minimum } => {
                write!(f, "sample count {given} below minimum {minimum}")
            }
            LimitError::QTooSmall => f.write_str("q must be >= 1"),
            LimitError::Map(e) => write!(f, "{e}"),
            LimitError::Transfer(e) => write!(f, "{e}"),
            LimitError::Obs(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LimitError {}

impl From<MapError> for LimitError {
    fn from(e: MapError) -> Self {
        LimitError::Map(e)
    }
}
impl From<TransferError> for LimitError {
    fn from(e: TransferError) -> Self {
        LimitError::Transfer(e)
    }
}
impl From<ObsError> for LimitError {
    fn from(e: ObsError) -> Self {
        LimitError::Obs(e)
    }
}

pub const DEFAULT_HITTING_BUDGET: u64 = 100_000_000;

/// Is x inside the chaotic region J?
fn in_j(map: &MapModel, x: f64) -> bool {
    match map.kind {
        MapKind::UnitInterval => x >= map.a1(),
        MapKind::HalfLine => x <= map.a1(),
    }
}

/// Orbit state in the coordinate where the laminar phase is tractable.
enum Orbit {
    /// Farey reciprocal coordinate: laminar descent is y -> y - 1 exactly.
    FareyY(f64),
    /// Quadratic-family reciprocal coordinate with compensation.
    PmY { y: f64, c: f64 },
    /// Half-line exponential coordinate with compensation.
    HalfExp { y: f64, c: f64 },
    /// Plain point; steps go through the forward map.
    Direct(f64),
}

impl Orbit {
    fn start(map: &MapModel, x: f64) -> Self {
        match map.laminar {
            LaminarKind::FareyUnit => Orbit::FareyY(1.0 / x),
            LaminarKind::PmQuadratic => Orbit::PmY { y: 1.0 / x, c: 0.0 },
            LaminarKind::PmHalfLine => Orbit::HalfExp { y: x.exp(), c: 0.0 },
            LaminarKind::None => Orbit::Direct(x),
        }
    }

    fn point(&self) -> f64 {
        match *self {
            Orbit::FareyY(y) => 1.0 / y,
            Orbit::PmY { y, c } => 1.0 / (y + c),
            Orbit::HalfExp { y, c } => (y + c).ln(),
            Orbit::Direct(x) => x,
        }
    }

    /// Steps remaining in the current laminar phase (None when already
    /// chaotic or unknown).
    fn laminar_left(&self, map: &MapModel) -> Option<u64> {
        match *self {
            Orbit::FareyY(y) => {
                if y <= 2.0 {
                    Some(0)
                } else {
                    Some(y.ceil() as u64 - 2)
                }
            }
            Orbit::PmY { y, c } => {
                let cut = 1.0 / map.a1();
                if y + c <= cut {
                    Some(0)
                } else {
                    None
                }
            }
            Orbit::HalfExp { y, c } => {
                let cut = map.a1().exp();
                if y + c <= cut {
                    Some(0)
                } else {
                    None
                }
            }
            Orbit::Direct(x) => {
                if in_j(map, x) {
                    Some(0)
                } else {
                    None
                }
            }
        }
    }

    /// Advance one step, preferring the laminar coordinate.
    fn step(&mut self, map: &MapModel) -> Result<(), LimitError> {
        match self {
            Orbit::FareyY(y) => {
                if *y > 2.0 {
                    *y -= 1.0;
                } else {
                    let d = *y - 1.0;
                    if d <= 0.0 {
                        return Err(LimitError::OrbitAtBoundary { x: 1.0 / *y });
                    }
                    *y = 1.0 / d;
                }
            }
            Orbit::PmY { y, c } => {
                let t = *y + *c;
                if t > 1.0 / map.a1() {
                    // reciprocal recursion for x -> x + x^2:
                    // y' = y - 1 + 1/(y + 1), compensated
                    let mut s = NeumaierSum::new();
                    s.add(*y);
                    s.add(*c);
                    s.add(-1.0);
                    s.add(1.0 / (t + 1.0));
                    *y = s.value();
                    *c = 0.0;
                } else {
                    let x = 1.0 / t;
                    let fx = map.forward(x);
                    if fx <= 0.0 || fx >= 1.0 {
                        return Err(LimitError::OrbitAtBoundary { x });
                    }
                    *y = 1.0 / fx;
                    *c = 0.0;
                }
            }
            Orbit::HalfExp { y, c } => {
                let t = *y + *c;
                if t > map.a1().exp() {
                    // e^s recursion for the laminar branch: y' = y^2/(y+2)
                    // = y - 2 + 4/(y+2), compensated
                    let mut s = NeumaierSum::new();
                    s.add(*y);
                    s.add(*c);
                    s.add(-2.0);
                    s.add(4.0 / (t + 2.0));
                    *y = s.value();
                    *c = 0.0;
                } else {
                    // chaotic branch in the same coordinate: y' = y^2/(2 - y)
                    let d = 2.0 - t;
                    if d <= 0.0 {
                        return Err(LimitError::OrbitAtBoundary { x: t.ln() });
                    }
                    *y = t * t / d;
                    *c = 0.0;
                }
            }
            Orbit::Direct(x) => {
                let fx = map.forward(*x);
                if !fx.is_finite() {
                    return Err(LimitError::OrbitAtBoundary { x: *x });
                }
                *x = fx;
            }
        }
        Ok(())
    }

    /// Skip an entire laminar run of `m` steps when the coordinate
    /// supports it; otherwise step one at a time.
    fn skip_laminar(&mut self, m: u64) -> bool {
        if let Orbit::FareyY(y) = self {
            *y -= m as f64;
            true
        } else {
            false
        }
    }
}

/// Minimal k >= 0 with T^k(x) in the chaotic region J.
pub fn hitting_time(map: &MapModel, x: f64, budget: u64) -> Result<u64, LimitError> {
    if in_j(map, x) {
        return Ok(0);
    }
    match map.laminar {
        LaminarKind::FareyUnit => {
            let y = 1.0 / x;
            Ok(y.ceil() as u64 - 2)
        }
        _ => {
            let mut orbit = Orbit::start(map, x);
            for k in 0..budget {
                if in_j(map, orbit.point()) {
                    return Ok(k);
                }
                orbit.step(map)?;
            }
            Err(LimitError::BudgetExhausted { x, budget })
        }
    }
}

/// T^n(x) with laminar acceleration where the family supports it.
pub fn advance(map: &MapModel, x: f64, n: u64) -> Result<f64, LimitError> {
    let mut orbit = Orbit::start(map, x);
    let mut left = n;
    while left > 0 {
        if let Some(m) = orbit.laminar_left(map) {
            let m = m.min(left);
            if m > 1 && orbit.skip_laminar(m) {
                left -= m;
                continue;
            }
        }
        orbit.step(map)?;
        left -= 1;
    }
    Ok(orbit.point())
}

// ---------------------------------------------------------------------------
// Hitting partitions and step observables
// ---------------------------------------------------------------------------

/// Level sets of the hitting time: B_k = (beta[k+1], beta[k]) with
/// beta[0] = 1, each pulled back through the indifferent inverse branch,
/// and their invariant masses r_k.
#[derive(Clone, Debug)]
pub struct HittingPartition {
    pub beta: Arc<Vec<f64>>,
    pub r: Arc<Vec<f64>>,
    pub k_max: usize,
}

pub fn build_hitting_partition(
    map: &MapModel,
    k_max: usize,
) -> Result<HittingPartition, LimitError> {
    if k_max < 1 {
        return Err(LimitError::KMaxTooSmall { given: k_max });
    }
    map.density()?;
    let mut beta = Vec::with_capacity(k_max + 2);
    beta.push(1.0);
    for k in 0..=k_max {
        beta.push(map.inverse(0, beta[k]));
    }
    let r: Vec<f64> = (0..=k_max)
        .map(|k| map.measure_interval(beta[k + 1], beta[k]))
        .collect();
    Ok(HittingPartition {
        beta: Arc::new(beta),
        r: Arc::new(r),
        k_max,
    })
}

/// Step observable over the hitting partition: value `values[j]` on
/// every level set B_k with k = j mod q. Its infinite-volume average is
/// the plain mean of the residue values.
pub fn step_observable(
    part: &HittingPartition,
    values: &[f64],
    q: usize,
) -> Result<GlobalObservable, LimitError> {
    if q < 1 || values.len() != q {
        return Err(LimitError::QTooSmall);
    }
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let av = values.iter().sum::<f64>() / q as f64;
    Ok(GlobalObservable {
        label: format!("step(q={q})"),
        kind: ObsKind::Step {
            beta: part.beta.clone(),
            masses: part.r.clone(),
            residue_values: Arc::new(values.to_vec()),
            q,
        },
        sup_bound: sup,
        known_av: Some(av),
        d_mu_uniformly_continuous: Some(false),
    })
}

/// The hitting time reduced mod q, as a step observable (values 0..q-1).
pub fn h_q(part: &HittingPartition, q: usize) -> Result<GlobalObservable, LimitError> {
    let values: Vec<f64> = (0..q).map(|j| j as f64).collect();
    let mut f = step_observable(part, &values, q)?;
    f.label = format!("h_{q}");
    f
        .known_av = Some((q as f64 - 1.0) / 2.0);
    Ok(f)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Knot count of the tabulated inverse CDF.
pub const SAMPLER_KNOTS: usize = 1 << 16;
/// Samples per deterministic RNG stream.
const BATCH: usize = 8192;

/// Tabulated inverse CDF of a probability measure with density g against
/// the model's reference measure.
pub struct InverseCdfSampler {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    total: f64,
}

impl InverseCdfSampler {
    pub fn build(map: &MapModel, g: &GridDensity) -> Self {
        let cum = g.cumulative(map);
        let (lo, hi) = (g.nodes[0], *g.nodes.last().unwrap());
        // geometric knots matching the grid's clustering
        let span = (hi / lo).ln();
        let m = SAMPLER_KNOTS;
        let mut knots = Vec::with_capacity(m);
        let mut cdf = Vec::with_capacity(m);
        for i in 0..m {
            let x = lo * (span * i as f64 / (m - 1) as f64).exp();
            knots.push(x);
            cdf.push(cum.below(map, x));
        }
        // enforce monotonicity against rounding
        for i in 1..m {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        let total = *cdf.last().unwrap();
        Self { knots, cdf, total }
    }

    /// Map a uniform u in [0,1) to a point distributed as g.
    pub fn sample(&self, u: f64) -> f64 {
        let target = u * self.total;
        let i = match self
            .cdf
            .binary_search_by(|c| c.partial_cmp(&target).unwrap())
        {
            Ok(i) => return self.knots[i],
            Err(i) => i.clamp(1, self.knots.len() - 1),
        };
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        if c1 <= c0 {
            return self.knots[i];
        }
        let t = (target - c0) / (c1 - c0);
        self.knots[i - 1] + t * (self.knots[i] - self.knots[i - 1])
    }
}

/// Deterministic parallel Monte Carlo: fixed-size batches, one RNG
/// stream per batch derived from the master seed, sequential reduction.
/// Results do not depend on the worker count.
pub(crate) fn run_batches<A: Send>(
    n_samples: usize,
    seed: u64,
    body: impl Fn(&mut ChaCha8Rng, usize) -> A + Sync,
) -> Vec<A> {
    let n_batches = n_samples.div_ceil(BATCH);
    (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let count = BATCH.min(n_samples - b * BATCH);
            body(&mut rng, count)
        })
        .collect()
}

/// Empirical law of a discrete statistic.
#[derive(Clone, Debug)]
pub struct EmpiricalDistribution {
    pub support: Vec<u64>,
    pub pmf: Vec<f64>,
    pub sample_count: usize,
    pub rng_seed: u64,
    /// Total-variation distance to the uniform law on the support.
    pub tv_to_uniform: f64,
}

/// Law of (hitting time of T^n x) mod q for x drawn from the probability
/// measure with density g, by laminar-accelerated simulation.
pub fn simulate_residue_distribution(
    map: &MapModel,
    g: &GridDensity,
    q: usize,
    n: u64,
    n_samples: usize,
    seed: u64,
) -> Result<EmpiricalDistribution, LimitError> {
    if q < 1 {
        return Err(LimitError::QTooSmall);
    }
    if n_samples < 1000 {
        return Err(LimitError::SampleCountTooSmall {
            given: n_samples,
            minimum: 1000,
        });
    }
    let sampler = InverseCdfSampler::build(map, g);
    let budget = DEFAULT_HITTING_BUDGET;
    let counts: Vec<Result<Vec<u64>, LimitError>> = run_batches(n_samples, seed, |rng, count| {
        let mut local = vec![0u64; q];
        for _ in 0..count {
            let x0 = sampler.sample(rng.random::<f64>());
            let xn = advance(map, x0, n)?;
            let h = hitting_time(map, xn, budget)?;
            local[(h % q as u64) as usize] += 1;
        }
        Ok(local)
    });
    let mut total = vec![0u64; q];
    for c in counts {
        let c = c?;
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let pmf: Vec<f64> = total.iter().map(|&c| c as f64 / n_samples as f64).collect();
    let tv = 0.5 * pmf.iter().map(|p| (p - 1.0 / q as f64).abs()).sum::<f64>();
    Ok(EmpiricalDistribution {
        support: (0..q as u64).collect(),
        pmf,
        sample_count: n_samples,
        rng_seed: seed,
        tv_to_uniform: tv,
    })
}

// ---------------------------------------------------------------------------
// Partial Birkhoff averages
// ---------------------------------------------------------------------------

/// Averaging window schedule for the partial Birkhoff statistics.
#[derive(Clone, Copy, Debug)]
pub enum BirkhoffSchedule {
    Fixed(u64),
    /// k_n = floor(sqrt(n)): one concrete slowly diverging choice.
    SqrtN,
}

impl BirkhoffSchedule {
    pub fn window(&self, n: u64) -> u64 {
        match self {
            BirkhoffSchedule::Fixed(k) => (*k).max(1),
            BirkhoffSchedule::SqrtN => ((n as f64).sqrt().floor() as u64).max(1),
        }
    }
}

/// Empirical characteristic function of the windowed Birkhoff average of
/// F after n steps, against its infinite-volume target.
#[derive(Clone, Debug)]
pub struct CharFnTable {
    pub theta: Vec<f64>,
    pub phi_re: Vec<f64>,
    pub phi_im: Vec<f64>,
    pub target_re: Vec<f64>,
    pub target_im: Vec<f64>,
    /// Sup over the theta grid of the modulus of the deviation.
    pub sup_dev: f64,
    pub window: u64,
    pub n: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn birkhoff_distribution(
    map: &MapModel,
    f: &GlobalObservable,
    schedule: BirkhoffSchedule,
    n: u64,
    g: &GridDensity,
    n_samples: usize,
    theta: &[f64],
    seed: u64,
    target: (&[f64], &[f64]),
) -> Result<CharFnTable, LimitError> {
    let k = schedule.window(n);
    let sampler = InverseCdfSampler::build(map, g);
    let m = theta.len();
    assert_eq!(target.0.len(), m);
    assert_eq!(target.1.len(), m);

    let partials: Vec<Result<(Vec<f64>, Vec<f64>), LimitError>> =
        run_batches(n_samples, seed, |rng, count| {
            let mut re = vec![0.0f64; m];
            let mut im = vec![0.0f64; m];
            for _ in 0..count {
                let x0 = sampler.sample(rng.random::<f64>());
                let mut x = advance(map, x0, n)?;
                let mut acc = f.eval(x);
                for _ in 1..k {
                    x = advance(map, x, 1)?;
                    acc += f.eval(x);
                }
                let a = acc / k as f64;
                for (i, &t) in theta.iter().enumerate() {
                    re[i] += (t * a).cos();
                    im[i] += (t * a).sin();
                }
            }
            Ok((re, im))
        });
    let mut re = vec![0.0f64; m];
    let mut im = vec![0.0f64; m];
    for p in partials {
        let (pr, pi) = p?;
        for i in 0..m {
            re[i] += pr[i];
            im[i] += pi[i];
        }
    }
    for v in re.iter_mut().chain(im.iter_mut()) {
        *v /= n_samples as f64;
    }
    let sup_dev = (0..m)
        .map(|i| {
            let dr = re[i] - target.0[i];
            let di = im[i] - target.1[i];
            (dr * dr + di * di).sqrt()
        })
        .fold(0.0, f64::max);
    Ok(CharFnTable {
        theta: theta.to_vec(),
        phi_re: re,
        phi_im: im,
        target_re: target.0.to_vec(),
        target_im: target.1.to_vec(),
        sup_dev,
        window: k,
        n,
    })
}

#[cfg(test)]
#[path = "limit_theorems_tests.rs"]
mod tests;
