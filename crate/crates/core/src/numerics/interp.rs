//! Shape-preserving piecewise-cubic interpolation.
//!
//! Node slopes follow the Fritsch–Carlson construction: weighted harmonic
//! means of adjacent secants, zeroed across local extrema, with clipped
//! one-sided endpoint estimates. On monotone data the interpolant is
//! monotone and stays within the node-value range of each cell; linear
//! data is reproduced exactly.

use super::quad::integrate_cell;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum InterpError {
    LengthMismatch,
    NonIncreasingNodes { index: usize },
    NonFinite,
}

impl fmt::Display for InterpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpError::LengthMismatch => f.write_str("nodes and values must have equal length >= 2"),
            InterpError::NonIncreasingNodes { index } => {
                write!(f, "nodes must be strictly increasing (violated at index {index})")
            }
            InterpError::NonFinite => f.write_str("nodes and values must be finite"),
        }
    }
}

impl std::error::Error for InterpError {}

#[derive(Clone, Debug)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self, InterpError> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(InterpError::LengthMismatch);
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(InterpError::NonFinite);
        }
        let mut h = Vec::with_capacity(n - 1);
        let mut delta = Vec::with_capacity(n - 1);
        for (i, (xw, yw)) in x.windows(2).zip(y.windows(2)).enumerate() {
            let hi = xw[1] - xw[0];
            if hi <= 0.0 {
                return Err(InterpError::NonIncreasingNodes { index: i });
            }
            h.push(hi);
            delta.push((yw[1] - yw[0]) / hi);
        }

        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (s1, s2) = (delta[k - 1], delta[k]);
            if s1 == 0.0 || s2 == 0.0 || s1.signum() != s2.signum() {
                d[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
            }
        }
        d[0] = endpoint_slope(h[0], h.get(1).copied(), delta[0], delta.get(1).copied());
        d[n - 1] = endpoint_slope(
            h[n - 2],
            (n >= 3).then(|| h[n - 3]),
            delta[n - 2],
            (n >= 3).then(|| delta[n - 3]),
        );

        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.x.len() - 1
    }

    pub fn cell_bounds(&self, k: usize) -> (f64, f64) {
        (self.x[k], self.x[k + 1])
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Evaluate at `q`; outside the node range the value is held constant
    /// at the nearest endpoint value. The second component reports
    /// whether `q` fell outside.
    pub fn eval_tracked(&self, q: f64) -> (f64, bool) {
        let n = self.x.len();
        if q <= self.x[0] {
            return (self.y[0], q < self.x[0]);
        }
        if q >= self.x[n - 1] {
            return (self.y[n - 1], q > self.x[n - 1]);
        }
        let k = self.x.partition_point(|&xi| xi <= q) - 1;
        (self.eval_in_cell(k, q), false)
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.eval_tracked(q).0
    }

    /// Hermite evaluation inside cell `k`; `q` must lie in that cell.
    pub fn eval_in_cell(&self, k: usize, q: f64) -> f64 {
        let h = self.x[k + 1] - self.x[k];
        let t = (q - self.x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[k] + h * (h10 * self.d[k] + h11 * self.d[k + 1]) + h01 * self.y[k + 1]
    }

    /// ∫ interpolant(x) w(x) dx over the full node range, one 8-point
    /// Gauss panel per cell.
    pub fn integral_weighted(&self, w: &dyn Fn(f64) -> f64) -> f64 {
        let mut total = super::sum::NeumaierSum::new();
        for k in 0..self.n_cells() {
            let (a, b) = self.cell_bounds(k);
            total.add(integrate_cell(&|q| self.eval_in_cell(k, q) * w(q), a, b));
        }
        total.value()
    }

    /// Cumulative ∫ from the first node, tabulated at every node.
    pub fn cumulative_weighted(&self, w: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len());
        let mut acc = super::sum::NeumaierSum::new();
        out.push(0.0);
        for k in 0..self.n_cells() {
            let (a, b) = self.cell_bounds(k);
            acc.add(integrate_cell(&|q| self.eval_in_cell(k, q) * w(q), a, b));
            out.push(acc.value());
        }
        out
    }
}

fn endpoint_slope(h0: f64, h1: Option<f64>, s0: f64, s1: Option<f64>) -> f64 {
    match (h1, s1) {
        (Some(h1), Some(s1)) => {
            let mut d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if d.signum() != s0.signum() {
                d = 0.0;
            } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
                d = 3.0 * s0;
            }
            d
        }
        _ => s0,
    }
}
